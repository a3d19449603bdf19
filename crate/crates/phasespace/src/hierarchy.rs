//! Moment-hierarchy synthesis and classification.
//!
//! Given any evolution generator `L` (a [`DiffOperator`]), the time
//! derivative of the phase-space moment `M_m = <x^m>` is obtained exactly
//! by pairing the formal adjoint of `L` with the monomial of `m`. Iterating
//! over all indices up to a requested order yields a linear ODE system
//! whose structure decides hierarchy preservation: the order-2 block closes
//! if and only if the generator is a drift/diffusion operator with low
//! coefficient degree, which for Hamiltonian flows means a quadratic
//! Hamiltonian.
//!
//! The module also hosts the cumulant toolbox (central moments, normalized
//! skewness/kurtosis, Gaussian-smoothing transport) and the witness-state
//! search that makes "the hierarchy is open" a constructive statement.

use crate::context::AlgebraContext;
use crate::diffop::{generator_of, DiffOperator};
use crate::poly::{multi_indices_up_to, Multi, PhasePolynomial, Var};
use crate::rational::{binomial, double_factorial_odd, GaussRat, Rat};
use crate::{PhaseError, Result};
use num::traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Index of one phase-space moment: exponents in the fixed
/// `(x_1..x_N, p_1..p_N)` ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MomentIndex(pub Multi);

impl MomentIndex {
    pub fn total_order(&self) -> u32 {
        self.0.total()
    }

    pub fn name(&self, modes: usize) -> String {
        if self.0.is_zero() {
            "M_1".into()
        } else {
            format!("M_{}", self.0.monomial_name(modes).replace('*', "_"))
        }
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0 .0.iter().map(|e| e.to_string()).collect();
        write!(f, "M[{}]", parts.join(","))
    }
}

/// Exact time derivative of one moment:
/// `d M_m / dt = sum_i c_i M_{m_i}`, returned in canonical sorted form.
pub fn moment_derivative(
    op: &DiffOperator,
    m: &MomentIndex,
) -> Result<Vec<(GaussRat, MomentIndex)>> {
    let ctx = op.context();
    if m.0.len() != ctx.vars() {
        return Err(PhaseError::Precondition(format!(
            "moment index length {} does not match context {}",
            m.0.len(),
            ctx
        )));
    }
    let monomial = PhasePolynomial::monomial(ctx, m.0.clone(), GaussRat::one());
    let paired = op.formal_adjoint().apply(&monomial)?;
    Ok(paired
        .terms()
        .map(|(idx, c)| (c.clone(), MomentIndex(idx.clone())))
        .collect())
}

/// Linear moment ODE system `dM_m/dt = sum C M_{m'}` for all indices with
/// total order up to `requested_order`. Targets may exceed the requested
/// order; that is exactly the openness being detected.
#[derive(Debug, Clone)]
pub struct MomentODESystem {
    pub generator_order: i64,
    pub coefficient_degree: i64,
    pub requested_order: u32,
    pub modes: usize,
    pub equations: BTreeMap<MomentIndex, Vec<(GaussRat, MomentIndex)>>,
}

pub fn build_ode_system(op: &DiffOperator, max_order: u32) -> Result<MomentODESystem> {
    if max_order < 1 {
        return Err(PhaseError::Precondition(
            "max_order must be at least 1".into(),
        ));
    }
    let ctx = op.context();
    let mut equations = BTreeMap::new();
    for idx in multi_indices_up_to(ctx.vars(), max_order) {
        let m = MomentIndex(idx);
        let rhs = moment_derivative(op, &m)?;
        equations.insert(m, rhs);
    }
    Ok(MomentODESystem {
        generator_order: op.differential_order(),
        coefficient_degree: op.coefficient_degree(),
        requested_order: max_order,
        modes: ctx.modes(),
        equations,
    })
}

/// Closure verdict for the order-2 block of a moment system.
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub closed_at_two: bool,
    /// First offending equation: (lhs index, target index beyond order 2).
    pub witness_equation: Option<(MomentIndex, MomentIndex)>,
    /// Adjacency list: which moments each equation references.
    pub coupling_graph: Vec<(MomentIndex, Vec<MomentIndex>)>,
}

pub fn closure_report(sys: &MomentODESystem) -> Result<ClosureReport> {
    if sys.requested_order < 2 {
        return Err(PhaseError::Precondition(
            "closure_report needs a system built with max_order >= 2".into(),
        ));
    }
    let mut closed = true;
    let mut witness = None;
    let mut graph = Vec::new();
    for (lhs, rhs) in &sys.equations {
        graph.push((
            lhs.clone(),
            rhs.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>(),
        ));
        if lhs.total_order() > 2 {
            continue;
        }
        for (_, target) in rhs {
            if target.total_order() > 2 {
                closed = false;
                if witness.is_none() {
                    witness = Some((lhs.clone(), target.clone()));
                }
            }
        }
    }
    Ok(ClosureReport {
        closed_at_two: closed,
        witness_equation: witness,
        coupling_graph: graph,
    })
}

impl MomentODESystem {
    pub fn to_json(&self) -> serde_json::Value {
        let equations: Vec<serde_json::Value> = self
            .equations
            .iter()
            .map(|(lhs, rhs)| {
                let rhs_json: Vec<serde_json::Value> = rhs
                    .iter()
                    .map(|(c, t)| {
                        serde_json::json!([
                            crate::hierarchy::coeff_json(c),
                            t.0 .0,
                        ])
                    })
                    .collect();
                serde_json::json!({ "lhs": lhs.0.0, "rhs": rhs_json })
            })
            .collect();
        serde_json::json!({
            "generator_order": self.generator_order,
            "requested_order": self.requested_order,
            "modes": self.modes,
            "equations": equations,
        })
    }
}

pub(crate) fn coeff_json(c: &GaussRat) -> serde_json::Value {
    use num::ToPrimitive;
    let enc = |v: &num::BigInt| -> serde_json::Value {
        match v.to_i64() {
            Some(n) => serde_json::json!(n),
            None => serde_json::json!(v.to_string()),
        }
    };
    serde_json::json!([
        enc(c.re.numer()),
        enc(c.re.denom()),
        enc(c.im.numer()),
        enc(c.im.denom())
    ])
}

// ---------------------------------------------------------------------------
// Hamiltonian classification
// ---------------------------------------------------------------------------

/// Witness that a degree >= 3 Hamiltonian escapes the quadratic algebra:
/// the Poisson bracket with some `x_i^2` or `p_i^2` reaches at least the
/// degree of `H` itself.
#[derive(Debug, Clone)]
pub struct MaximalityWitness {
    /// The quadratic probe, `x_i^2` or `p_i^2`.
    pub probe: PhasePolynomial,
    /// `{H, probe}`.
    pub bracket: PhasePolynomial,
}

#[derive(Debug, Clone)]
pub struct HamiltonianClassification {
    pub degree: i64,
    pub generator_order: i64,
    pub hierarchy_preserving: bool,
    pub closure: ClosureReport,
    pub maximality_witness: Option<MaximalityWitness>,
}

/// Classify a real Hamiltonian symbol: hierarchy preserving iff quadratic,
/// with the synthesized order-2 closure report and, for degree >= 3, a
/// maximality witness.
pub fn classify_hamiltonian(h: &PhasePolynomial) -> Result<HamiltonianClassification> {
    if !h.is_real() {
        return Err(PhaseError::NonRealCoefficients(
            "classification needs a real symbol".into(),
        ));
    }
    let op = generator_of(h)?;
    let sys = build_ode_system(&op, 2)?;
    let closure = closure_report(&sys)?;
    let degree = h.degree();
    let witness = if degree >= 3 {
        Some(maximality_witness(h)?)
    } else {
        None
    };
    Ok(HamiltonianClassification {
        degree,
        generator_order: op.differential_order(),
        hierarchy_preserving: degree <= 2,
        closure,
        maximality_witness: witness,
    })
}

fn maximality_witness(h: &PhasePolynomial) -> Result<MaximalityWitness> {
    let ctx = h.context();
    let d = h.degree();
    for i in 0..ctx.modes() {
        for probe in [
            PhasePolynomial::var(ctx, Var::X(i)).pow(2),
            PhasePolynomial::var(ctx, Var::P(i)).pow(2),
        ] {
            let bracket = h.poisson_bracket(&probe)?;
            if bracket.degree() >= d {
                return Ok(MaximalityWitness { probe, bracket });
            }
        }
    }
    // cannot happen: the top-degree part of h depends on some variable,
    // whose conjugate probe reproduces degree d in the bracket
    Err(PhaseError::NoWitness)
}

// ---------------------------------------------------------------------------
// Witness states
// ---------------------------------------------------------------------------

/// A state from the witness search family: vacuum displaced to an exact
/// rational phase-space point per mode. Its Wigner function is the Gaussian
/// of covariance (hbar/2) I centered there, so all moments are exact
/// rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacedVacuum {
    /// Per-mode displacement (x_0, p_0).
    pub centers: Vec<(Rat, Rat)>,
}

impl DisplacedVacuum {
    pub fn vacuum(modes: usize) -> Self {
        DisplacedVacuum {
            centers: vec![(Rat::zero(), Rat::zero()); modes],
        }
    }

    pub fn uniform(modes: usize, x0: Rat, p0: Rat) -> Self {
        DisplacedVacuum {
            centers: vec![(x0, p0); modes],
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.centers
            .iter()
            .all(|(a, b)| a.is_zero() && b.is_zero())
    }

    /// Exact Wigner moment of a single axis: `E[(c + xi)^e]` with
    /// `xi ~ N(0, hbar/2)`; only even powers of the fluctuation survive.
    fn axis_moment(center: &Rat, e: u32, hbar: &Rat) -> Rat {
        let half_hbar = hbar / Rat::from_integer(2.into());
        let mut acc = Rat::zero();
        let mut r = 0;
        while r <= e {
            // C(e, r) (r-1)!! (hbar/2)^{r/2} center^{e-r}
            let mut term = binomial(e, r) * double_factorial_odd(r / 2);
            for _ in 0..(r / 2) {
                term *= &half_hbar;
            }
            for _ in 0..(e - r) {
                term *= center;
            }
            acc += term;
            r += 2;
        }
        acc
    }

    /// Exact Wigner moment of a monomial index.
    pub fn moment(&self, idx: &MomentIndex, ctx: &AlgebraContext) -> Rat {
        let n = ctx.modes();
        let mut acc = Rat::one();
        for (i, (x0, p0)) in self.centers.iter().enumerate() {
            acc *= Self::axis_moment(x0, idx.0 .0[i], ctx.hbar());
            acc *= Self::axis_moment(p0, idx.0 .0[n + i], ctx.hbar());
        }
        acc
    }

    /// Mean vector in the (x_1..x_N, p_1..p_N) ordering, as f64.
    pub fn mean_f64(&self) -> Vec<f64> {
        let n = self.centers.len();
        let mut v = vec![0.0; 2 * n];
        for (i, (x0, p0)) in self.centers.iter().enumerate() {
            v[i] = crate::rational::rat_to_f64(x0);
            v[n + i] = crate::rational::rat_to_f64(p0);
        }
        v
    }
}

impl fmt::Display for DisplacedVacuum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vacuum() {
            return write!(f, "vacuum");
        }
        let parts: Vec<String> = self
            .centers
            .iter()
            .map(|(x, p)| format!("({x},{p})"))
            .collect();
        write!(f, "displaced-vacuum@[{}]", parts.join(","))
    }
}

/// Successful witness: a family state together with a low-order moment
/// whose time derivative under the generator of `H` is exactly nonzero.
#[derive(Debug, Clone)]
pub struct WitnessRecord {
    pub state: DisplacedVacuum,
    pub moment: MomentIndex,
    /// Exact value of `d<M>/dt` at t = 0 on that state; never zero.
    pub derivative: GaussRat,
}

/// Search family: vacuum, four unit displacements, and the diagonal
/// displacement. The diagonal one alone witnesses every monomial
/// Hamiltonian (all its Gaussian moment factors are strictly positive);
/// the earlier entries keep the reported witnesses minimal.
fn witness_family(modes: usize) -> Vec<DisplacedVacuum> {
    let one = Rat::one();
    vec![
        DisplacedVacuum::vacuum(modes),
        DisplacedVacuum::uniform(modes, one.clone(), Rat::zero()),
        DisplacedVacuum::uniform(modes, -one.clone(), Rat::zero()),
        DisplacedVacuum::uniform(modes, Rat::zero(), one.clone()),
        DisplacedVacuum::uniform(modes, Rat::zero(), -one.clone()),
        DisplacedVacuum::uniform(modes, one.clone(), one),
    ]
}

/// Find a state with a provably nonzero first- or second-moment derivative
/// under the generator of a degree >= 3 Hamiltonian.
///
/// First moments are scanned across the whole family before second
/// moments, so e.g. `H = x^3` reports vacuum with `d<p>/dt = -3 hbar/2`
/// while `H = x^4` (whose odd vacuum moments vanish) reports a displaced
/// state.
pub fn find_witness_state(h: &PhasePolynomial) -> Result<WitnessRecord> {
    if h.degree() < 3 {
        return Err(PhaseError::Precondition(format!(
            "witness search requires deg H >= 3, got {}",
            h.degree()
        )));
    }
    let ctx = h.context();
    let op = generator_of(h)?;
    let family = witness_family(ctx.modes());
    for order in [1u32, 2] {
        for idx in multi_indices_up_to(ctx.vars(), order) {
            if idx.total() != order {
                continue;
            }
            let m = MomentIndex(idx);
            let rhs = moment_derivative(&op, &m)?;
            if rhs.is_empty() {
                continue;
            }
            for state in &family {
                let mut value = GaussRat::zero();
                for (c, target) in &rhs {
                    value += &c.scale(&state.moment(target, ctx));
                }
                if !value.is_zero() {
                    return Ok(WitnessRecord {
                        state: state.clone(),
                        moment: m,
                        derivative: value,
                    });
                }
            }
        }
    }
    Err(PhaseError::NoWitness)
}

// ---------------------------------------------------------------------------
// Cumulants
// ---------------------------------------------------------------------------

/// Per-axis cumulant summary built from raw moments.
///
/// Cumulants are the primary representation: central and standardized
/// moments are recomputed from them on demand, so Gaussian smoothing can
/// shift `k2` while leaving every higher cumulant bit-identical.
#[derive(Debug, Clone)]
pub struct CumulantVector {
    pub mean: f64,
    /// cumulants\[r\] is kappa_{r}; index 0 unused, kappa_1 = mean.
    pub cumulants: Vec<f64>,
}

impl CumulantVector {
    pub fn order(&self) -> usize {
        self.cumulants.len() - 1
    }

    pub fn kappa(&self, r: usize) -> f64 {
        self.cumulants[r]
    }

    /// Central moments mu_0..mu_k reconstructed from the cumulants
    /// (valid for k <= 6).
    pub fn central_moments(&self) -> Vec<f64> {
        let k = self.order();
        let kp = |r: usize| if r <= k { self.cumulants[r] } else { 0.0 };
        let mut mu = vec![0.0; k + 1];
        mu[0] = 1.0;
        if k >= 2 {
            mu[2] = kp(2);
        }
        if k >= 3 {
            mu[3] = kp(3);
        }
        if k >= 4 {
            mu[4] = kp(4) + 3.0 * kp(2) * kp(2);
        }
        if k >= 5 {
            mu[5] = kp(5) + 10.0 * kp(3) * kp(2);
        }
        if k >= 6 {
            mu[6] = kp(6) + 15.0 * kp(4) * kp(2) + 10.0 * kp(3) * kp(3)
                + 15.0 * kp(2) * kp(2) * kp(2);
        }
        mu
    }

    /// Normalized skewness mu_3 / mu_2^{3/2}.
    pub fn m3(&self) -> Option<f64> {
        if self.order() < 3 {
            return None;
        }
        let k2 = self.kappa(2);
        Some(self.kappa(3) / k2.powf(1.5))
    }

    /// Normalized kurtosis mu_4 / mu_2^2 (3 for any Gaussian).
    pub fn m4(&self) -> Option<f64> {
        if self.order() < 4 {
            return None;
        }
        let k2 = self.kappa(2);
        Some(3.0 + self.kappa(4) / (k2 * k2))
    }
}

/// Build a cumulant vector from raw moments `raw[r] = E[y^r]`, `raw[0] = 1`.
pub fn cumulants_from_moments(raw: &[f64]) -> Result<CumulantVector> {
    if raw.len() < 3 {
        return Err(PhaseError::Precondition(
            "need raw moments at least up to order 2".into(),
        ));
    }
    if (raw[0] - 1.0).abs() > 1e-9 {
        return Err(PhaseError::Precondition(format!(
            "zeroth moment must be 1, got {}",
            raw[0]
        )));
    }
    let k = (raw.len() - 1).min(6);
    let mean = raw[1];
    // central moments via binomial shift
    let mut mu = vec![0.0; k + 1];
    mu[0] = 1.0;
    for r in 1..=k {
        let mut acc = 0.0;
        for j in 0..=r {
            let c = binom_f64(r, j);
            acc += c * (-mean).powi((r - j) as i32) * raw[j];
        }
        mu[r] = acc;
    }
    if k >= 2 && mu[2] <= 0.0 {
        return Err(PhaseError::Precondition(format!(
            "variance must be positive, got {}",
            mu[2]
        )));
    }
    let mut kappa = vec![0.0; k + 1];
    kappa[1] = mean;
    if k >= 2 {
        kappa[2] = mu[2];
    }
    if k >= 3 {
        kappa[3] = mu[3];
    }
    if k >= 4 {
        kappa[4] = mu[4] - 3.0 * mu[2] * mu[2];
    }
    if k >= 5 {
        kappa[5] = mu[5] - 10.0 * mu[3] * mu[2];
    }
    if k >= 6 {
        kappa[6] = mu[6] - 15.0 * mu[4] * mu[2] - 10.0 * mu[3] * mu[3]
            + 30.0 * mu[2] * mu[2] * mu[2];
    }
    Ok(CumulantVector {
        mean,
        cumulants: kappa,
    })
}

fn binom_f64(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Transport cumulants through convolution with a centered Gaussian of
/// width sigma: `k2` grows by `sigma^2`, every higher cumulant is
/// unchanged (bit-identical), and the standardized moments follow from the
/// shifted `k2`.
pub fn gaussian_smooth_cumulants(cv: &CumulantVector, sigma: f64) -> Result<CumulantVector> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(PhaseError::Precondition(format!(
            "smoothing width must be nonnegative, got {sigma}"
        )));
    }
    let mut out = cv.clone();
    if out.order() >= 2 {
        out.cumulants[2] += sigma * sigma;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Closed-system integration
// ---------------------------------------------------------------------------

/// Trajectory of a closed moment system: exact propagation by the matrix
/// exponential of the (finite) coupling matrix, evaluated at each requested
/// time. `tol` is validated for interface stability; the propagator's
/// local error is at machine level, far below any sensible tolerance.
pub fn integrate_closed_system(
    sys: &MomentODESystem,
    initial: &BTreeMap<MomentIndex, f64>,
    times: &[f64],
    tol: f64,
) -> Result<Vec<(f64, BTreeMap<MomentIndex, f64>)>> {
    if tol <= 0.0 {
        return Err(PhaseError::Precondition("tolerance must be positive".into()));
    }
    let indices: Vec<MomentIndex> = sys.equations.keys().cloned().collect();
    let pos: BTreeMap<&MomentIndex, usize> =
        indices.iter().enumerate().map(|(i, m)| (m, i)).collect();

    // closure over the requested index set
    for (lhs, rhs) in &sys.equations {
        for (_, target) in rhs {
            if !pos.contains_key(target) {
                return Err(PhaseError::OpenSystem(format!(
                    "equation for {lhs} references {target} outside the requested set"
                )));
            }
        }
    }

    let dim = indices.len();
    let mut coupling = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for (lhs, rhs) in &sys.equations {
        let row = pos[lhs];
        for (c, target) in rhs {
            coupling[(row, pos[target])] += c.to_f64();
        }
    }

    let mut init = nalgebra::DVector::<f64>::zeros(dim);
    for (i, m) in indices.iter().enumerate() {
        match initial.get(m) {
            Some(v) => init[i] = *v,
            None => {
                return Err(PhaseError::Precondition(format!(
                    "missing initial value for {m}"
                )))
            }
        }
    }

    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let propagator = crate::linalg::expm(&(coupling.clone() * t));
        let state = &propagator * &init;
        let snapshot: BTreeMap<MomentIndex, f64> = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), state[i]))
            .collect();
        out.push((t, snapshot));
    }
    Ok(out)
}

/// The complex monomial `(conj a)^p a^q` expressed as a phase-space
/// polynomial in the UNnormalized ladder symbols `x - i p` and `x + i p`
/// (the `(2 hbar)^{-(p+q)/2}` normalization is a scalar applied at the
/// reporting layer, where values are floating point anyway).
pub fn alpha_monomial(ctx: &AlgebraContext, mode: usize, p: u32, q: u32) -> PhasePolynomial {
    let x = PhasePolynomial::var(ctx, Var::X(mode));
    let ip = PhasePolynomial::var(ctx, Var::P(mode)).scale(&GaussRat::i());
    let a_bar = x.sub(&ip).expect("same context");
    let a = x.add(&ip).expect("same context");
    a_bar.pow(p).mul(&a.pow(q)).expect("same context")
}
