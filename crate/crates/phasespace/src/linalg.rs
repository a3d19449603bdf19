//! Small dense linear-algebra helpers shared by the numerical layer:
//! a cyclic Jacobi eigensolver for complex Hermitian matrices and a
//! scaling-and-squaring Pade matrix exponential for real matrices.
//!
//! Both are deliberately dependency-light (no LAPACK binding) so the whole
//! engine builds for any target, and both are validated in tests against
//! closed-form spectra.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;

/// Eigendecomposition of a Hermitian matrix: `a = v diag(values) v^H`.
pub struct HermitianEigen {
    pub values: DVector<f64>,
    /// Unitary matrix of eigenvectors (columns).
    pub vectors: DMatrix<C64>,
}

/// Cyclic Jacobi diagonalization of a complex Hermitian matrix.
///
/// Each sweep annihilates every off-diagonal pair (p, q) with a unitary
/// plane rotation; convergence is quadratic once the off-diagonal mass is
/// small. Tolerances are scaled to the input norm.
pub fn hermitian_eigen(a: &DMatrix<C64>) -> HermitianEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let mut v = DMatrix::<C64>::identity(n, n);

    let norm = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-14 * norm.max(1e-300);

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= tol / (n as f64) {
                    continue;
                }
                // phase factor so the rotated 2x2 block becomes real
                let phase = apq / r; // e^{i theta}
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = [[c, s*phase], [-s*conj(phase), c]] applied on (p, q)
                let u_pp = C64::new(c, 0.0);
                let u_pq = phase * s;
                let u_qp = -phase.conj() * s;
                let u_qq = C64::new(c, 0.0);

                // m <- U^H m U  (only rows/cols p, q change)
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * u_pp + mkq * u_qp;
                    m[(k, q)] = mkp * u_pq + mkq * u_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = u_pp.conj() * mpk + u_qp.conj() * mqk;
                    m[(q, k)] = u_pq.conj() * mpk + u_qq.conj() * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
                // clean the annihilated pair of rounding dust
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    // sort ascending, permuting eigenvectors alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let sorted_vals = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
    let mut sorted_vecs = DMatrix::<C64>::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        sorted_vecs.set_column(new, &v.column(old));
    }
    HermitianEigen {
        values: sorted_vals,
        vectors: sorted_vecs,
    }
}

/// Matrix exponential of a real square matrix by Pade(6) approximation
/// with scaling and squaring.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let norm = a.iter().map(|x| x.abs()).fold(0.0f64, f64::max) * n as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.map(|x| x / 2f64.powi(s));

    // Pade(6): p(x)/q(x) with q(x) = p(-x)
    const COEFF: [f64; 7] = [
        1.0,
        0.5,
        elem(5.0, 44.0),
        elem(1.0, 66.0),
        elem(1.0, 792.0),
        elem(1.0, 15840.0),
        elem(1.0, 665280.0),
    ];
    const fn elem(a: f64, b: f64) -> f64 {
        a / b
    }

    let id = DMatrix::<f64>::identity(n, n);
    let mut term = id.clone();
    let mut p = id.clone() * COEFF[0];
    let mut q = id.clone() * COEFF[0];
    for (k, &ck) in COEFF.iter().enumerate().skip(1) {
        term = &term * &scaled;
        p += &term * ck;
        if k % 2 == 0 {
            q += &term * ck;
        } else {
            q -= &term * ck;
        }
    }
    let mut e = q.lu().solve(&p).expect("Pade denominator is invertible");
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_reproduces_known_spectrum() {
        // Hermitian 3x3 with known eigenvalues via characteristic scan
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(3.0, 0.0),
                C64::new(0.0, 0.5),
                C64::new(1.0, 0.0),
                C64::new(0.0, -0.5),
                C64::new(1.0, 0.0),
            ],
        );
        let eig = hermitian_eigen(&a);
        // residual || a v - v diag || should be tiny
        let lam = DMatrix::from_diagonal(&eig.values.map(|x| C64::new(x, 0.0)));
        let resid = &a * &eig.vectors - &eig.vectors * lam;
        assert!(resid.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        // unitarity
        let uhu = eig.vectors.adjoint() * &eig.vectors;
        let id = DMatrix::<C64>::identity(3, 3);
        assert!((uhu - id).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        // trace preserved
        let sum: f64 = eig.values.iter().sum();
        assert_relative_eq!(sum, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_handles_degenerate_eigenvalues() {
        let a = DMatrix::<C64>::identity(4, 4) * C64::new(2.5, 0.0);
        let eig = hermitian_eigen(&a);
        for v in eig.values.iter() {
            assert_relative_eq!(*v, 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn expm_matches_rotation_closed_form() {
        let t = 0.7f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-13);
        assert_relative_eq!(e[(0, 1)], t.sin(), epsilon = 1e-13);
        assert_relative_eq!(e[(1, 0)], -t.sin(), epsilon = 1e-13);
        assert_relative_eq!(e[(1, 1)], t.cos(), epsilon = 1e-13);
    }

    #[test]
    fn expm_matches_hyperbolic_closed_form() {
        let r = 1.3f64;
        let a = DMatrix::from_row_slice(2, 2, &[r, 0.0, 0.0, -r]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], r.exp(), epsilon = 1e-12 * r.exp());
        assert_relative_eq!(e[(1, 1)], (-r).exp(), epsilon = 1e-12);
        assert_relative_eq!(e[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_of_nilpotent_is_polynomial() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e[(0, 1)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(e[(1, 1)], 1.0, epsilon = 1e-14);
    }
}
