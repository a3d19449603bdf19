//! Truncated Fock-space oracle.
//!
//! Weyl quantization maps polynomial symbols to Hermitian matrices on a
//! cutoff Fock space; unitary evolution goes through an exact Hermitian
//! eigendecomposition, and symmetric-ordered (Wigner) as well as
//! anti-normal-ordered (Husimi) moments come from ladder algebra. Nothing
//! in this module consults the symbolic generator machinery, which is what
//! makes it an independent oracle for every claim about moment dynamics.
//!
//! Truncation policy: matrix elements are always assembled at an inflated
//! cutoff (the requested dimension plus the polynomial degree) and then
//! cropped, so every retained entry is exact; residual truncation effects
//! are confined to states with appreciable tail mass, which the evolve
//! path detects and handles by cutoff escalation.

use crate::context::AlgebraContext;
use crate::hierarchy::{cumulants_from_moments, CumulantVector, MomentIndex};
use crate::linalg::{hermitian_eigen, C64};
use crate::poly::{Multi, PhasePolynomial, Var};
use crate::rational::rat_to_f64;
use crate::{PhaseError, Result};
use nalgebra::{DMatrix, DVector};

/// Escalation cap: single mode 512, two modes 64 per mode.
fn cutoff_cap(modes: usize) -> usize {
    match modes {
        1 => 512,
        _ => 64,
    }
}

const TAIL_THRESHOLD: f64 = 1e-8;

/// Annihilation operator on a `d`-dimensional Fock space.
pub fn ladder(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn quadrature_ops(ctx: &AlgebraContext, d: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let s = (ctx.hbar_f64() / 2.0).sqrt();
    let a = ladder(d);
    let ad = a.adjoint();
    let x = (&a + &ad) * C64::new(s, 0.0);
    let p = (&ad - &a) * C64::new(0.0, s);
    (x, p)
}

/// Weyl (symmetric) ordering of a single-mode monomial `x^a p^b` via the
/// McCoy identity `2^{-a} sum_k C(a,k) X^k P^b X^{a-k}`, assembled at an
/// inflated cutoff and cropped so all retained entries are exact.
fn weyl_monomial_single(ctx: &AlgebraContext, a: u32, b: u32, d: usize) -> DMatrix<C64> {
    let deg = (a + b) as usize;
    let dd = d + deg;
    let (x, p) = quadrature_ops(ctx, dd);
    // power caches
    let mut xp_pows: Vec<DMatrix<C64>> = vec![DMatrix::identity(dd, dd)];
    for k in 0..a as usize {
        let next = &xp_pows[k] * &x;
        xp_pows.push(next);
    }
    let mut pb = DMatrix::identity(dd, dd);
    for _ in 0..b {
        pb = &pb * &p;
    }
    let mut acc = DMatrix::<C64>::zeros(dd, dd);
    let mut binom = 1.0f64;
    for k in 0..=a {
        if k > 0 {
            binom = binom * (a - k + 1) as f64 / k as f64;
        }
        let term = &xp_pows[k as usize] * &pb * &xp_pows[(a - k) as usize];
        acc += term * C64::new(binom, 0.0);
    }
    acc *= C64::new(0.5f64.powi(a as i32), 0.0);
    acc.view((0, 0), (d, d)).into_owned()
}

/// Weyl image of a polynomial symbol on the cutoff Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub ctx: AlgebraContext,
    /// Per-mode cutoff dimensions.
    pub dims: Vec<usize>,
    pub matrix: DMatrix<C64>,
    /// The source symbol, kept for cutoff escalation.
    pub symbol: Option<PhasePolynomial>,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Largest entry of `M - M^H`.
    pub fn hermiticity_residual(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Weyl-quantize a symbol with per-mode cutoff `d`.
pub fn weyl_quantize(f: &PhasePolynomial, d: usize) -> Result<FockOperator> {
    let ctx = f.context().clone();
    ctx.ensure_quantum()?;
    let modes = ctx.modes();
    if modes > 2 {
        return Err(PhaseError::Precondition(
            "the Fock oracle supports at most two modes".into(),
        ));
    }
    let deg = f.degree().max(0) as usize;
    if (d as i64) < f.degree() + 2 {
        return Err(PhaseError::CutoffTooSmall {
            cutoff: d,
            why: format!("need at least deg + 2 = {}", deg + 2),
        });
    }
    let dim: usize = d.pow(modes as u32);
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for (m, c) in f.terms() {
        let mut term = DMatrix::<C64>::identity(1, 1);
        for mode in 0..modes {
            let a = m.0[mode];
            let b = m.0[modes + mode];
            let factor = weyl_monomial_single(&ctx, a, b, d);
            term = term.kronecker(&factor);
        }
        let (re, im) = c.to_complex();
        acc += term * C64::new(re, im);
    }
    Ok(FockOperator {
        ctx,
        dims: vec![d; modes],
        matrix: acc,
        symbol: Some(f.clone()),
    })
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum StateRepr {
    Pure(DVector<C64>),
    Density(DMatrix<C64>),
}

/// State on the truncated Fock space: pure amplitude vector or density
/// matrix.
#[derive(Debug, Clone)]
pub struct FockState {
    pub dims: Vec<usize>,
    pub repr: StateRepr,
}

impl FockState {
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn vacuum(d: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[0] = C64::new(1.0, 0.0);
        FockState {
            dims: vec![d],
            repr: StateRepr::Pure(v),
        }
    }

    pub fn fock(n: usize, d: usize) -> Result<Self> {
        if n >= d {
            return Err(PhaseError::CutoffTooSmall {
                cutoff: d,
                why: format!("Fock level {n} out of range"),
            });
        }
        let mut v = DVector::zeros(d);
        v[n] = C64::new(1.0, 0.0);
        Ok(FockState {
            dims: vec![d],
            repr: StateRepr::Pure(v),
        })
    }

    /// Coherent state |beta> with amplitudes `e^{-|b|^2/2} b^n / sqrt(n!)`,
    /// renormalized on the cutoff space (the tail check guards adequacy).
    pub fn coherent(beta: C64, d: usize) -> Self {
        let mut v = DVector::zeros(d);
        let mut amp = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..d {
            if n > 0 {
                amp = amp * beta / C64::new((n as f64).sqrt(), 0.0);
            }
            v[n] = amp;
        }
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        FockState {
            dims: vec![d],
            repr: StateRepr::Pure(v),
        }
    }

    /// Normalized superposition of Fock levels.
    pub fn superposition(weights: &[(usize, C64)], d: usize) -> Result<Self> {
        let mut v = DVector::zeros(d);
        for &(n, w) in weights {
            if n >= d {
                return Err(PhaseError::CutoffTooSmall {
                    cutoff: d,
                    why: format!("Fock level {n} out of range"),
                });
            }
            v[n] += w;
        }
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(PhaseError::NonPhysicalState("zero superposition".into()));
        }
        v /= C64::new(norm, 0.0);
        Ok(FockState {
            dims: vec![d],
            repr: StateRepr::Pure(v),
        })
    }

    /// Two-mode product of single-mode pure states.
    pub fn product(a: &FockState, b: &FockState) -> Result<Self> {
        match (&a.repr, &b.repr) {
            (StateRepr::Pure(u), StateRepr::Pure(v)) => {
                let mut w = DVector::zeros(u.len() * v.len());
                for i in 0..u.len() {
                    for j in 0..v.len() {
                        w[i * v.len() + j] = u[i] * v[j];
                    }
                }
                Ok(FockState {
                    dims: a
                        .dims
                        .iter()
                        .chain(b.dims.iter())
                        .cloned()
                        .collect(),
                    repr: StateRepr::Pure(w),
                })
            }
            _ => Err(PhaseError::Precondition(
                "product states need pure factors".into(),
            )),
        }
    }

    /// Norm / trace sanity check.
    pub fn check_normalized(&self) -> Result<()> {
        match &self.repr {
            StateRepr::Pure(v) => {
                let n = v.norm();
                if (n - 1.0).abs() > 1e-10 {
                    return Err(PhaseError::NonPhysicalState(format!(
                        "norm {n} deviates from 1"
                    )));
                }
            }
            StateRepr::Density(rho) => {
                let tr: C64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
                if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                    return Err(PhaseError::NonPhysicalState(format!(
                        "trace {tr} deviates from 1"
                    )));
                }
                let herm = (rho - rho.adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if herm > 1e-10 {
                    return Err(PhaseError::NonPhysicalState(format!(
                        "density asymmetry {herm:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Probability mass on basis states where any mode sits in the top 10%
    /// of its levels.
    pub fn tail_mass(&self) -> f64 {
        let cutlow: Vec<usize> = self
            .dims
            .iter()
            .map(|&d| d - (d / 10).max(1))
            .collect();
        let mut mass = 0.0;
        let dim = self.dim();
        for flat in 0..dim {
            let mut rest = flat;
            let mut tail = false;
            for (k, &d) in self.dims.iter().enumerate().rev() {
                let n = rest % d;
                rest /= d;
                if n >= cutlow[k] {
                    tail = true;
                }
            }
            if tail {
                mass += match &self.repr {
                    StateRepr::Pure(v) => v[flat].norm_sqr(),
                    StateRepr::Density(rho) => rho[(flat, flat)].re,
                };
            }
        }
        mass
    }

    /// Expectation value of a matrix in this state.
    pub fn expectation(&self, m: &DMatrix<C64>) -> C64 {
        match &self.repr {
            StateRepr::Pure(v) => (v.adjoint() * m * v)[(0, 0)],
            StateRepr::Density(rho) => {
                let prod = rho * m;
                (0..prod.nrows()).map(|i| prod[(i, i)]).sum()
            }
        }
    }

    /// |<a|b>|^2 for pure states.
    pub fn fidelity(&self, other: &FockState) -> Result<f64> {
        match (&self.repr, &other.repr) {
            (StateRepr::Pure(u), StateRepr::Pure(v)) => {
                if u.len() != v.len() {
                    return Err(PhaseError::Precondition(
                        "fidelity needs equal dimensions".into(),
                    ));
                }
                Ok((u.adjoint() * v)[(0, 0)].norm_sqr())
            }
            _ => Err(PhaseError::Precondition(
                "fidelity implemented for pure states".into(),
            )),
        }
    }

    /// Embed a pure state into larger per-mode cutoffs (zero padding).
    fn embed(&self, dims: &[usize]) -> Result<FockState> {
        match &self.repr {
            StateRepr::Pure(v) => {
                let old = &self.dims;
                let new_dim: usize = dims.iter().product();
                let mut w = DVector::zeros(new_dim);
                for flat in 0..v.len() {
                    // unflatten in old dims, reflatten in new
                    let mut rest = flat;
                    let mut levels = vec![0usize; old.len()];
                    for k in (0..old.len()).rev() {
                        levels[k] = rest % old[k];
                        rest /= old[k];
                    }
                    let mut nf = 0usize;
                    for k in 0..dims.len() {
                        nf = nf * dims[k] + levels[k];
                    }
                    w[nf] = v[flat];
                }
                Ok(FockState {
                    dims: dims.to_vec(),
                    repr: StateRepr::Pure(w),
                })
            }
            StateRepr::Density(_) => Err(PhaseError::Precondition(
                "cutoff escalation implemented for pure states".into(),
            )),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.repr {
            StateRepr::Pure(v) => serde_json::json!({
                "cutoff": self.dims[0],
                "dims": self.dims,
                "amplitudes": v.iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>(),
            }),
            StateRepr::Density(rho) => serde_json::json!({
                "cutoff": self.dims[0],
                "dims": self.dims,
                "rho": (0..rho.nrows())
                    .map(|r| (0..rho.ncols()).map(|c| vec![rho[(r,c)].re, rho[(r,c)].im]).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

/// Unitary evolution `exp(-i H t / hbar)` by Hermitian eigendecomposition,
/// with automatic cutoff escalation (doubling, up to the cap) whenever the
/// evolved state's tail mass violates the adequacy threshold.
pub fn evolve(state: &FockState, op: &FockOperator, t: f64) -> Result<FockState> {
    Ok(evolve_many(state, op, &[t])?.pop().unwrap())
}

/// Evolve one state to several times with a single eigendecomposition,
/// under the standard escalation cap (512 single mode, 64 per mode).
pub fn evolve_many(state: &FockState, op: &FockOperator, times: &[f64]) -> Result<Vec<FockState>> {
    evolve_many_with_cap(state, op, times, cutoff_cap(op.dims.len()))
}

/// Evolution with an explicit escalation cap.
pub fn evolve_many_with_cap(
    state: &FockState,
    op: &FockOperator,
    times: &[f64],
    cap: usize,
) -> Result<Vec<FockState>> {
    state.check_normalized()?;
    let herm = op.hermiticity_residual();
    if herm > 1e-10 {
        return Err(PhaseError::Precondition(format!(
            "operator is not Hermitian: residual {herm:.3e}"
        )));
    }
    if state.dims != op.dims {
        return Err(PhaseError::Precondition(
            "state and operator cutoffs differ".into(),
        ));
    }
    let hbar = op.ctx.hbar_f64();
    let mut cur_state = state.clone();
    let mut cur_op = op.clone();
    loop {
        let eig = hermitian_eigen(&cur_op.matrix);
        let out: Result<Vec<FockState>> = times
            .iter()
            .map(|&t| {
                let phases = DVector::from_iterator(
                    eig.values.len(),
                    eig.values.iter().map(|&e| C64::from_polar(1.0, -e * t / hbar)),
                );
                match &cur_state.repr {
                    StateRepr::Pure(v) => {
                        let coeffs = eig.vectors.adjoint() * v;
                        let rotated = coeffs.component_mul(&phases);
                        let evolved = &eig.vectors * rotated;
                        Ok(FockState {
                            dims: cur_state.dims.clone(),
                            repr: StateRepr::Pure(evolved),
                        })
                    }
                    StateRepr::Density(rho) => {
                        let u = &eig.vectors
                            * DMatrix::from_diagonal(&phases)
                            * eig.vectors.adjoint();
                        Ok(FockState {
                            dims: cur_state.dims.clone(),
                            repr: StateRepr::Density(&u * rho * u.adjoint()),
                        })
                    }
                }
            })
            .collect();
        let out = out?;
        let worst_tail = out
            .iter()
            .map(|s| s.tail_mass())
            .fold(state.tail_mass(), f64::max);
        if worst_tail <= TAIL_THRESHOLD {
            return Ok(out);
        }
        // escalate
        let next_d = cur_op.dims[0] * 2;
        if next_d > cap {
            return Err(PhaseError::CutoffCapExceeded {
                cap,
                tail: worst_tail,
            });
        }
        let symbol = cur_op.symbol.clone().ok_or_else(|| {
            PhaseError::Precondition(
                "cutoff escalation needs the source symbol on the operator".into(),
            )
        })?;
        cur_op = weyl_quantize(&symbol, next_d)?;
        cur_state = cur_state.embed(&vec![next_d; state.dims.len()])?;
    }
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// Symmetric-ordered (Wigner) moment `<Weyl(x^m)>`.
pub fn wigner_moment(state: &FockState, idx: &MomentIndex, ctx: &AlgebraContext) -> Result<f64> {
    state.check_normalized()?;
    let modes = state.modes();
    if idx.0.len() != 2 * modes || modes != ctx.modes() {
        return Err(PhaseError::Precondition(
            "moment index does not match state/context".into(),
        ));
    }
    let deg = idx.0.total() as usize;
    let d = state.dims[0];
    if d < deg + 2 {
        return Err(PhaseError::CutoffTooSmall {
            cutoff: d,
            why: format!("monomial order {deg} needs cutoff >= {}", deg + 2),
        });
    }
    let mut term = DMatrix::<C64>::identity(1, 1);
    for mode in 0..modes {
        let a = idx.0 .0[mode];
        let b = idx.0 .0[modes + mode];
        let factor = weyl_monomial_single(ctx, a, b, state.dims[mode]);
        term = term.kronecker(&factor);
    }
    let val = state.expectation(&term);
    Ok(val.re)
}

/// Anti-normal-ordered (Husimi) moment `Tr(rho a^q adag^p)` of one mode.
pub fn husimi_moment(state: &FockState, p: u32, q: u32, mode: usize) -> Result<C64> {
    state.check_normalized()?;
    if mode >= state.modes() {
        return Err(PhaseError::Precondition("mode out of range".into()));
    }
    let d = state.dims[mode];
    let deg = (p + q) as usize;
    if d < deg + 2 {
        return Err(PhaseError::CutoffTooSmall {
            cutoff: d,
            why: format!("ladder order {deg} needs cutoff >= {}", deg + 2),
        });
    }
    // assemble at inflated cutoff, crop, kron with identities on other modes
    let dd = d + deg;
    let a = ladder(dd);
    let ad = a.adjoint();
    let mut m = DMatrix::<C64>::identity(dd, dd);
    for _ in 0..q {
        m = &m * &a;
    }
    for _ in 0..p {
        m = &m * &ad;
    }
    let m = m.view((0, 0), (d, d)).into_owned();
    let mut full = DMatrix::<C64>::identity(1, 1);
    for k in 0..state.modes() {
        if k == mode {
            full = full.kronecker(&m);
        } else {
            full = full.kronecker(&DMatrix::<C64>::identity(state.dims[k], state.dims[k]));
        }
    }
    Ok(state.expectation(&full))
}

/// Raw Wigner quadrature moments `[1, <y>, ..., <y^k>]` for one axis.
pub fn wigner_quadrature_raw_moments(
    state: &FockState,
    axis: Var,
    up_to: usize,
    ctx: &AlgebraContext,
) -> Result<Vec<f64>> {
    let modes = ctx.modes();
    let flat = axis.flat(modes);
    let mut out = Vec::with_capacity(up_to + 1);
    for k in 0..=up_to {
        let mut exps = vec![0u32; 2 * modes];
        exps[flat] = k as u32;
        out.push(wigner_moment(state, &MomentIndex(Multi(exps)), ctx)?);
    }
    Ok(out)
}

/// Raw Husimi quadrature moments of one axis, from anti-normal-ordered
/// ladder moments (independent of the Wigner path).
pub fn husimi_quadrature_raw_moments(
    state: &FockState,
    axis: Var,
    up_to: usize,
    ctx: &AlgebraContext,
) -> Result<Vec<f64>> {
    ctx.ensure_quantum()?;
    let (mode, is_x) = match axis {
        Var::X(i) => (i, true),
        Var::P(i) => (i, false),
    };
    let s = (ctx.hbar_f64() / 2.0).sqrt();
    let mut out = Vec::with_capacity(up_to + 1);
    for k in 0..=up_to as u32 {
        // x = s (alpha + conj alpha); p = i s (conj alpha - alpha)
        let mut acc = C64::new(0.0, 0.0);
        let mut binom = 1.0f64;
        for j in 0..=k {
            if j > 0 {
                binom = binom * (k - j + 1) as f64 / j as f64;
            }
            // term alpha^j conj(alpha)^{k-j} -> Tr rho a^j adag^{k-j}
            let base = husimi_moment(state, k - j, j, mode)?;
            let sign = if is_x {
                C64::new(1.0, 0.0)
            } else {
                // (i)^k (-1)^j from expanding (i (conj a - a))^k
                let ik = match k % 4 {
                    0 => C64::new(1.0, 0.0),
                    1 => C64::new(0.0, 1.0),
                    2 => C64::new(-1.0, 0.0),
                    _ => C64::new(0.0, -1.0),
                };
                ik * if j % 2 == 1 { -1.0 } else { 1.0 }
            };
            acc += base * sign * C64::new(binom, 0.0);
        }
        let scale = s.powi(k as i32);
        let val = acc * C64::new(scale, 0.0);
        out.push(val.re);
    }
    Ok(out)
}

/// Wigner quadrature cumulants (central/standardized moments) of one axis.
pub fn quadrature_cumulants(
    state: &FockState,
    axis: Var,
    up_to: usize,
    ctx: &AlgebraContext,
) -> Result<CumulantVector> {
    if up_to > 8 {
        return Err(PhaseError::Precondition(
            "quadrature cumulants capped at order 8".into(),
        ));
    }
    let raw = wigner_quadrature_raw_moments(state, axis, up_to, ctx)?;
    cumulants_from_moments(&raw)
}

/// Husimi-side quadrature cumulants of one axis.
pub fn husimi_quadrature_cumulants(
    state: &FockState,
    axis: Var,
    up_to: usize,
    ctx: &AlgebraContext,
) -> Result<CumulantVector> {
    if up_to > 8 {
        return Err(PhaseError::Precondition(
            "quadrature cumulants capped at order 8".into(),
        ));
    }
    let raw = husimi_quadrature_raw_moments(state, axis, up_to, ctx)?;
    cumulants_from_moments(&raw)
}

// ---------------------------------------------------------------------------
// Operator-level commutator check
// ---------------------------------------------------------------------------

/// Residual of `[Weyl(H1), Weyl(H2)] / (i hbar) - Weyl({H1, H2}_Moyal)` on
/// the interior block (excluding the top `deg H1 + deg H2` levels per
/// mode, where truncation corrupts matrix products).
pub fn dequantize_check(h1: &PhasePolynomial, h2: &PhasePolynomial, d: usize) -> Result<f64> {
    h1.context().ensure_same(h2.context())?;
    let ctx = h1.context();
    ctx.ensure_quantum()?;
    let total_deg = (h1.degree().max(0) + h2.degree().max(0)) as usize;
    if d < total_deg + 4 {
        return Err(PhaseError::CutoffTooSmall {
            cutoff: d,
            why: format!("need at least deg H1 + deg H2 + 4 = {}", total_deg + 4),
        });
    }
    let w1 = weyl_quantize(h1, d)?;
    let w2 = weyl_quantize(h2, d)?;
    let bracket = h1.moyal_bracket(h2)?;
    let wb = weyl_quantize(&bracket, d)?;
    let hbar = ctx.hbar_f64();
    let comm = (&w1.matrix * &w2.matrix - &w2.matrix * &w1.matrix) / C64::new(0.0, hbar);
    let resid = comm - &wb.matrix;
    // interior block per mode
    let modes = ctx.modes();
    let keep = d - total_deg.min(d);
    let mut max = 0.0f64;
    let dim: usize = d.pow(modes as u32);
    for r in 0..dim {
        for c in 0..dim {
            let mut interior = true;
            let (mut rr, mut cc) = (r, c);
            for _ in 0..modes {
                if rr % d >= keep || cc % d >= keep {
                    interior = false;
                    break;
                }
                rr /= d;
                cc /= d;
            }
            if interior {
                max = max.max(resid[(r, c)].norm());
            }
        }
    }
    Ok(max)
}

/// Coherent-state parameter for a displaced vacuum from the hierarchy
/// witness family: `beta = (x0 + i p0) / sqrt(2 hbar)`.
pub fn coherent_from_displacement(
    state: &crate::hierarchy::DisplacedVacuum,
    ctx: &AlgebraContext,
    d: usize,
) -> Result<FockState> {
    if state.centers.len() != 1 {
        return Err(PhaseError::Precondition(
            "single-mode displacement expected".into(),
        ));
    }
    let scale = (2.0 * ctx.hbar_f64()).sqrt();
    let (x0, p0) = &state.centers[0];
    let beta = C64::new(rat_to_f64(x0) / scale, rat_to_f64(p0) / scale);
    Ok(FockState::coherent(beta, d))
}
