//! The quadratic sector: sp(2N, R) generators, Lie-closure checks and
//! Gaussian-state propagation.
//!
//! Degree <= 2 Hamiltonians map to a matrix pair `(A, b)`: the mean obeys
//! `dR/dt = A R + b` and the covariance `dS/dt = A S + S A^T`, with
//! `A = Omega H_sym` in the fixed `(x_1..x_N, p_1..p_N)` ordering and
//! `Omega = [[0, I], [-I, 0]]`. Construction is exact (rational matrices);
//! propagation is floating point through the matrix exponential.

use crate::context::AlgebraContext;
use crate::linalg::{expm, hermitian_eigen, C64};
use crate::poly::{Multi, PhasePolynomial, Var};
use crate::rational::{rat_to_f64, GaussRat, Rat};
use crate::{PhaseError, Result};
use nalgebra::{DMatrix, DVector};
use num::traits::{One, Zero};
use std::fmt;

// ---------------------------------------------------------------------------
// Exact rational matrices (small, dense)
// ---------------------------------------------------------------------------

/// Dense matrix over the rationals; just enough structure for sp(2N, R)
/// bookkeeping at exact precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = RatMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Rat::zero();
                for k in 0..self.cols {
                    acc += self.get(r, k) * other.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| rat_to_f64(self.get(r, c)))
    }

    /// The symplectic form Omega for N modes in x-first ordering.
    pub fn omega(modes: usize) -> Self {
        let mut out = RatMatrix::zeros(2 * modes, 2 * modes);
        for i in 0..modes {
            out.set(i, modes + i, Rat::one());
            out.set(modes + i, i, -Rat::one());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Symplectic generators
// ---------------------------------------------------------------------------

/// Affine generator of a quadratic Hamiltonian flow: `dR/dt = A R + b`,
/// kept in exact rational form next to its f64 view.
#[derive(Debug, Clone)]
pub struct SymplecticGenerator {
    pub modes: usize,
    pub a: RatMatrix,
    pub b: Vec<Rat>,
}

impl SymplecticGenerator {
    pub fn a_f64(&self) -> DMatrix<f64> {
        self.a.to_f64()
    }

    pub fn b_f64(&self) -> DVector<f64> {
        DVector::from_iterator(self.b.len(), self.b.iter().map(rat_to_f64))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let a = self.a_f64();
        let rows: Vec<Vec<f64>> = (0..a.nrows())
            .map(|r| (0..a.ncols()).map(|c| a[(r, c)]).collect())
            .collect();
        serde_json::json!({
            "A": rows,
            "b": self.b.iter().map(rat_to_f64).collect::<Vec<f64>>(),
        })
    }
}

/// Extract the `(A, b)` pair of a degree <= 2 real Hamiltonian:
/// `A = Omega H_sym`, `b = Omega c` where `H = 1/2 R^T H_sym R + c^T R +
/// const` (the constant is a global phase and is discarded).
pub fn quadratic_to_matrix(h: &PhasePolynomial) -> Result<SymplecticGenerator> {
    if !h.is_real() {
        return Err(PhaseError::NonRealCoefficients(
            "quadratic sector needs a real symbol".into(),
        ));
    }
    if h.degree() > 2 {
        return Err(PhaseError::DegreeTooHigh {
            what: format!("{h}"),
            found: h.degree(),
            limit: 2,
        });
    }
    let ctx = h.context();
    let dim = ctx.vars();
    let mut h_sym = RatMatrix::zeros(dim, dim);
    let mut linear = vec![Rat::zero(); dim];
    for (m, c) in h.terms() {
        let coeff = c.re.clone();
        match m.total() {
            0 => {} // global phase
            1 => {
                let i = m.0.iter().position(|&e| e == 1).unwrap();
                linear[i] += &coeff;
            }
            2 => {
                // either one variable squared or a cross term
                let nz: Vec<(usize, u32)> = m
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (i, e))
                    .collect();
                if nz.len() == 1 {
                    let (i, _) = nz[0];
                    // coeff * r_i^2 = 1/2 * (2 coeff) r_i r_i
                    let v = h_sym.get(i, i) + &coeff * Rat::from_integer(2.into());
                    h_sym.set(i, i, v);
                } else {
                    let (i, _) = nz[0];
                    let (j, _) = nz[1];
                    let vij = h_sym.get(i, j) + &coeff;
                    h_sym.set(i, j, vij);
                    let vji = h_sym.get(j, i) + &coeff;
                    h_sym.set(j, i, vji);
                }
            }
            _ => unreachable!("degree checked above"),
        }
    }
    let omega = RatMatrix::omega(ctx.modes());
    let a = omega.matmul(&h_sym);
    let b: Vec<Rat> = (0..dim)
        .map(|r| {
            let mut acc = Rat::zero();
            for k in 0..dim {
                acc += omega.get(r, k) * &linear[k];
            }
            acc
        })
        .collect();
    Ok(SymplecticGenerator {
        modes: ctx.modes(),
        a,
        b,
    })
}

/// Exact sp(2N, R) membership: `A^T Omega + Omega A = 0`.
pub fn verify_sp_membership_exact(a: &RatMatrix) -> Result<bool> {
    if a.rows != a.cols || a.rows % 2 != 0 || a.rows == 0 {
        return Err(PhaseError::Precondition(
            "sp membership needs a square even-dimensional matrix".into(),
        ));
    }
    let omega = RatMatrix::omega(a.rows / 2);
    Ok(a.transpose()
        .matmul(&omega)
        .add(&omega.matmul(a))
        .is_zero())
}

/// Floating-point sp(2N, R) membership to 1e-12 (entrywise).
pub fn verify_sp_membership(a: &DMatrix<f64>) -> Result<bool> {
    if a.nrows() != a.ncols() || a.nrows() % 2 != 0 || a.nrows() == 0 {
        return Err(PhaseError::Precondition(
            "sp membership needs a square even-dimensional matrix".into(),
        ));
    }
    let omega = RatMatrix::omega(a.nrows() / 2).to_f64();
    let resid = a.transpose() * &omega + &omega * a;
    Ok(resid.iter().all(|v| v.abs() <= 1e-12))
}

// ---------------------------------------------------------------------------
// Lie-closure check
// ---------------------------------------------------------------------------

/// Result of checking a polynomial family for closure under the Poisson
/// bracket. Closure and hierarchy preservation are distinct verdicts: an
/// abelian family containing a cubic closes trivially yet still breaks the
/// hierarchy.
#[derive(Debug, Clone)]
pub struct AlgebraClosureReport {
    pub closed: bool,
    /// Pairwise brackets, `brackets[i][j] = {basis_i, basis_j}`.
    pub brackets: Vec<Vec<PhasePolynomial>>,
    /// When closed: `structure[i][j]` lists the expansion coefficients of
    /// `{basis_i, basis_j}` in the basis.
    pub structure_constants: Option<Vec<Vec<Vec<GaussRat>>>>,
    /// Pairs whose bracket falls outside the rational span of the basis.
    pub failures: Vec<(usize, usize)>,
    /// Indices of members of degree >= 3 (hierarchy breaking regardless of
    /// closure).
    pub hierarchy_breaking_members: Vec<usize>,
}

/// Check closure of a family of real polynomials under the Poisson bracket
/// and compute structure constants when closed.
pub fn algebra_closure_check(basis: &[PhasePolynomial]) -> Result<AlgebraClosureReport> {
    for b in basis {
        if !b.is_real() {
            return Err(PhaseError::NonRealCoefficients(
                "closure check needs real symbols".into(),
            ));
        }
    }
    if basis.is_empty() {
        return Ok(AlgebraClosureReport {
            closed: true,
            brackets: vec![],
            structure_constants: Some(vec![]),
            failures: vec![],
            hierarchy_breaking_members: vec![],
        });
    }
    let n = basis.len();
    let mut brackets = Vec::with_capacity(n);
    let mut structure = vec![vec![Vec::new(); n]; n];
    let mut failures = Vec::new();
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let b = basis[i].poisson_bracket(&basis[j])?;
            match expand_in_span(&b, basis)? {
                Some(coeffs) => structure[i][j] = coeffs,
                None => failures.push((i, j)),
            }
            row.push(b);
        }
        brackets.push(row);
    }
    let closed = failures.is_empty();
    Ok(AlgebraClosureReport {
        closed,
        brackets,
        structure_constants: if closed { Some(structure) } else { None },
        failures,
        hierarchy_breaking_members: basis
            .iter()
            .enumerate()
            .filter(|(_, b)| b.degree() >= 3)
            .map(|(i, _)| i)
            .collect(),
    })
}

/// Solve `target = sum_k c_k basis_k` exactly over the Gaussian rationals;
/// returns None when the target is outside the span.
fn expand_in_span(
    target: &PhasePolynomial,
    basis: &[PhasePolynomial],
) -> Result<Option<Vec<GaussRat>>> {
    // collect the union of monomials
    let mut monos: Vec<Multi> = Vec::new();
    for poly in basis.iter().chain(std::iter::once(target)) {
        for (m, _) in poly.terms() {
            if !monos.contains(m) {
                monos.push(m.clone());
            }
        }
    }
    monos.sort();
    let rows = monos.len();
    let cols = basis.len();
    // augmented complex rational system [B | t]
    let mut mat: Vec<Vec<GaussRat>> = (0..rows)
        .map(|r| {
            let mut row: Vec<GaussRat> =
                (0..cols).map(|c| basis[c].coefficient(&monos[r])).collect();
            row.push(target.coefficient(&monos[r]));
            row
        })
        .collect();
    // exact Gauss-Jordan
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..cols {
        let Some(sel) = (pivot_row..rows).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(pivot_row, sel);
        let inv = mat[pivot_row][col].inv();
        for v in mat[pivot_row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..rows {
            if r != pivot_row && !mat[r][col].is_zero() {
                let factor = mat[r][col].clone();
                for c2 in 0..=cols {
                    let delta = &factor * &mat[pivot_row][c2];
                    mat[r][c2] = &mat[r][c2] - &delta;
                }
            }
        }
        pivots.push((pivot_row, col));
        pivot_row += 1;
        if pivot_row == rows {
            break;
        }
    }
    // inconsistent rows => outside span
    for r in pivot_row..rows {
        if !mat[r][cols].is_zero() {
            return Ok(None);
        }
    }
    let mut coeffs = vec![GaussRat::zero(); cols];
    for (r, c) in pivots {
        coeffs[c] = mat[r][cols].clone();
    }
    Ok(Some(coeffs))
}

// ---------------------------------------------------------------------------
// Gaussian states
// ---------------------------------------------------------------------------

/// Gaussian state: mean vector and symmetric covariance in the
/// `(x_1..x_N, p_1..p_N)` ordering.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum: zero mean, covariance (hbar/2) I.
    pub fn vacuum(ctx: &AlgebraContext) -> Self {
        let dim = ctx.vars();
        GaussianState {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * (ctx.hbar_f64() / 2.0),
        }
    }

    /// Physicality: symmetric covariance and `cov + i (hbar/2) Omega >= 0`.
    pub fn check_physical(&self, ctx: &AlgebraContext) -> Result<()> {
        let dim = self.mean.len();
        if self.cov.nrows() != dim || self.cov.ncols() != dim || dim != ctx.vars() {
            return Err(PhaseError::NonPhysicalState(
                "dimension mismatch between mean, covariance and context".into(),
            ));
        }
        let asym = (&self.cov - self.cov.transpose())
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        if asym > 1e-12 {
            return Err(PhaseError::NonPhysicalState(format!(
                "covariance asymmetry {asym:.3e}"
            )));
        }
        let omega = RatMatrix::omega(dim / 2).to_f64();
        let half_hbar = ctx.hbar_f64() / 2.0;
        let herm = DMatrix::from_fn(dim, dim, |r, c| {
            C64::new(self.cov[(r, c)], half_hbar * omega[(r, c)])
        });
        let eig = hermitian_eigen(&herm);
        let min = eig.values.min();
        if min < -1e-10 {
            return Err(PhaseError::NonPhysicalState(format!(
                "uncertainty violated: min eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Raw moments [1, <y>, <y^2>, ..., <y^k>] of one quadrature from the
    /// Gaussian moment formulas.
    pub fn quadrature_raw_moments(&self, var: Var, up_to: usize) -> Vec<f64> {
        let modes = self.mean.len() / 2;
        let i = var.flat(modes);
        let mean = self.mean[i];
        let sigma2 = self.cov[(i, i)];
        let mut out = vec![0.0; up_to + 1];
        for (r, slot) in out.iter_mut().enumerate() {
            // E[(m + s Z)^r] with Z standard normal
            let mut acc = 0.0;
            let mut j = 0;
            while j <= r {
                // C(r, j) m^{r-j} s^j (j-1)!!
                let mut term = 1.0;
                for t in 0..j / 2 {
                    term *= (2 * t + 1) as f64;
                }
                let mut c = 1.0;
                for t in 0..j {
                    c = c * (r - t) as f64 / (t + 1) as f64;
                }
                acc += c * mean.powi((r - j) as i32) * sigma2.powf(j as f64 / 2.0) * term;
                j += 2;
            }
            *slot = acc;
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = (0..self.cov.nrows())
            .map(|r| (0..self.cov.ncols()).map(|c| self.cov[(r, c)]).collect())
            .collect();
        serde_json::json!({
            "mean": self.mean.iter().cloned().collect::<Vec<f64>>(),
            "cov": rows,
        })
    }
}

impl fmt::Display for GaussianState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GaussianState(mean={:?})", self.mean.as_slice())
    }
}

/// Propagate a Gaussian state along an affine symplectic flow for time `t`:
/// mean via the augmented matrix exponential (handles the drift exactly),
/// covariance via `Phi S Phi^T` with `Phi = exp(A t)`.
pub fn evolve_gaussian(
    state: &GaussianState,
    generator: &SymplecticGenerator,
    t: f64,
    ctx: &AlgebraContext,
) -> Result<GaussianState> {
    state.check_physical(ctx)?;
    let dim = state.mean.len();
    if generator.a.rows != dim {
        return Err(PhaseError::Precondition(
            "generator dimension does not match state".into(),
        ));
    }
    let a = generator.a_f64();
    let b = generator.b_f64();
    // augmented [[A, b], [0, 0]]: top-right block of its exponential is the
    // accumulated drift integral
    let mut aug = DMatrix::<f64>::zeros(dim + 1, dim + 1);
    aug.view_mut((0, 0), (dim, dim)).copy_from(&(a.clone() * t));
    aug.view_mut((0, dim), (dim, 1)).copy_from(&(b * t));
    let big = expm(&aug);
    let phi = big.view((0, 0), (dim, dim)).into_owned();
    let drift = big.view((0, dim), (dim, 1)).into_owned();
    let mean = &phi * &state.mean + drift.column(0);
    let cov = &phi * &state.cov * phi.transpose();
    let out = GaussianState { mean, cov };
    out.check_physical(ctx)?;
    Ok(out)
}
