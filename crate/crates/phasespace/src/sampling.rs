//! Heterodyne (Husimi) sampling and cumulant estimation.
//!
//! Detection is modeled as exact Q-function sampling: rejection from a
//! centered Gaussian proposal whose second moment matches the state's
//! `1 + <n>` envelope, with the domination constant bounded numerically
//! and re-verified at every draw. Streams are counter-based (ChaCha12,
//! one stream per fixed-size shard), so a batch is bit-identical for a
//! given `(state, n, seed)` regardless of how shards are scheduled.
//!
//! Cumulants are estimated with k-statistics (the unbiased estimators)
//! and carry analytic normal-theory standard errors; a delete-block
//! jackknife is available as a cross-check.

use crate::context::AlgebraContext;
use crate::linalg::C64;
use crate::poly::Var;
use crate::quantize::{evolve, weyl_quantize, FockState, StateRepr};
use crate::rational::rat;
use crate::{PhaseError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Identifier of the sampling algorithm recorded in every batch.
pub const RNG_ALGORITHM: &str = "chacha12-shard8192-rejection/v1";

const SHARD: usize = 8192;

/// A batch of heterodyne samples (complex alpha values).
#[derive(Debug, Clone)]
pub struct SampleBatch {
    /// (Re alpha, Im alpha) pairs.
    pub points: Vec<(f64, f64)>,
    pub seed: u64,
    pub state_ref: String,
    pub rng_id: String,
    /// Fraction of proposals accepted.
    pub acceptance_rate: f64,
}

impl SampleBatch {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Quadrature projection of the samples: `x = sqrt(2 hbar) Re alpha`
    /// or `p = sqrt(2 hbar) Im alpha`.
    pub fn quadrature(&self, axis: Var, ctx: &AlgebraContext) -> Vec<f64> {
        let scale = (2.0 * ctx.hbar_f64()).sqrt();
        match axis {
            Var::X(_) => self.points.iter().map(|(re, _)| scale * re).collect(),
            Var::P(_) => self.points.iter().map(|(_, im)| scale * im).collect(),
        }
    }

    /// CSV with a header comment carrying the provenance.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# state={} seed={} n={} rng={}\nre_alpha,im_alpha\n",
            self.state_ref,
            self.seed,
            self.n(),
            self.rng_id
        );
        for (re, im) in &self.points {
            out.push_str(&format!("{re},{im}\n"));
        }
        out
    }
}

/// Weight of the wide mixture component in the proposal. The narrow
/// component matches the state's `1 + <n>` envelope; the wide one (second
/// moment ~ cutoff) dominates the polynomial large-radius region where a
/// cutoff state's Q function lives o(e^{-r} r^{D}).
const WIDE_WEIGHT: f64 = 0.01;

/// Q-function evaluator with the precomputed rejection envelope.
struct QSampler {
    /// c_n / sqrt(n!) for pure states.
    poly: Vec<C64>,
    density: Option<nalgebra::DMatrix<C64>>,
    /// Narrow proposal second moment s^2 = 1 + <n>.
    s2: f64,
    /// Wide proposal second moment ~ cutoff + 1.
    s2_wide: f64,
    /// Domination constant: Q <= bound * proposal everywhere.
    bound: f64,
}

impl QSampler {
    fn new(state: &FockState) -> Result<Self> {
        state.check_normalized()?;
        if state.modes() != 1 {
            return Err(PhaseError::Precondition(
                "heterodyne sampling is single-mode".into(),
            ));
        }
        let d = state.dims[0];
        let mut inv_sqrt_fact = Vec::with_capacity(d);
        let mut acc = 1.0f64;
        for n in 0..d {
            if n > 0 {
                acc /= (n as f64).sqrt();
            }
            inv_sqrt_fact.push(acc);
        }
        let (poly, density, nbar, abs_poly) = match &state.repr {
            StateRepr::Pure(v) => {
                let poly: Vec<C64> = v
                    .iter()
                    .enumerate()
                    .map(|(n, c)| c * C64::new(inv_sqrt_fact[n], 0.0))
                    .collect();
                let nbar: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(n, c)| n as f64 * c.norm_sqr())
                    .sum();
                let abs_poly: Vec<f64> = v
                    .iter()
                    .enumerate()
                    .map(|(n, c)| c.norm() * inv_sqrt_fact[n])
                    .collect();
                (poly, None, nbar, abs_poly)
            }
            StateRepr::Density(rho) => {
                let nbar: f64 = (0..d).map(|n| n as f64 * rho[(n, n)].re).sum();
                // row-sum envelope: |<alpha|rho|alpha>| e^{|a|^2}
                //   <= (sum_n sqrt(rho_nn) r^{n/2} / sqrt(n!))^2
                let abs_poly: Vec<f64> = (0..d)
                    .map(|n| rho[(n, n)].re.max(0.0).sqrt() * inv_sqrt_fact[n])
                    .collect();
                (Vec::new(), Some(rho.clone()), nbar, abs_poly)
            }
        };
        let s2 = 1.0 + nbar;
        let s2_wide = (d as f64 + 1.0).max(s2);
        // bound = sup_r  q_bound(r) e^{-r} / mix(r)  with
        //   q_bound(r) = min( (sum_n |c_n| r^{n/2}/sqrt(n!))^2 ,
        //                     sum_{n<D} r^n/n! )          [Cauchy-Schwarz]
        //   mix(r)     = (1-w) e^{-r/s2}/s2 + w e^{-r/S2}/S2
        // scanned densely; every accepted draw re-verifies the bound
        let mut bound = 0.0f64;
        let r_max = 16.0 * s2_wide.max(s2);
        let steps = 8192;
        for k in 0..=steps {
            let r = r_max * k as f64 / steps as f64;
            let sqrt_r = r.sqrt();
            let mut b = 0.0;
            let mut rp = 1.0;
            for coeff in &abs_poly {
                b += coeff * rp;
                rp *= sqrt_r;
            }
            let mut etrunc = 0.0;
            let mut term = 1.0;
            for n in 0..d {
                etrunc += term;
                term *= r / (n as f64 + 1.0);
            }
            let q_bound = (b * b).min(etrunc);
            let val = q_bound * (-r).exp() / mixture_density(r, s2, s2_wide);
            bound = bound.max(val);
        }
        if !bound.is_finite() || bound <= 0.0 {
            return Err(PhaseError::EnvelopeFailure(format!(
                "bad domination constant {bound}"
            )));
        }
        bound *= 1.05;
        Ok(QSampler {
            poly,
            density,
            s2,
            s2_wide,
            bound,
        })
    }

    /// Mixture proposal density at |alpha|^2 = r, without the global 1/pi.
    fn mixture(&self, r: f64) -> f64 {
        mixture_density(r, self.s2, self.s2_wide)
    }

    /// pi e^{|alpha|^2} Q(alpha): the envelope-free part of the density.
    fn q_core(&self, alpha: C64) -> f64 {
        match &self.density {
            None => {
                // Horner in conj(alpha)
                let z = alpha.conj();
                let mut acc = C64::new(0.0, 0.0);
                for c in self.poly.iter().rev() {
                    acc = acc * z + c;
                }
                acc.norm_sqr()
            }
            Some(rho) => {
                let d = rho.nrows();
                let z = alpha.conj();
                let mut v = Vec::with_capacity(d);
                let mut amp = C64::new(1.0, 0.0);
                let mut fact = 1.0f64;
                for n in 0..d {
                    if n > 0 {
                        fact /= (n as f64).sqrt();
                        amp *= z;
                    }
                    v.push(amp * C64::new(fact, 0.0));
                }
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..d {
                    let mut row = C64::new(0.0, 0.0);
                    for c in 0..d {
                        row += rho[(r, c)] * v[c];
                    }
                    acc += v[r].conj() * row;
                }
                acc.re.max(0.0)
            }
        }
    }
}

fn mixture_density(r: f64, s2: f64, s2_wide: f64) -> f64 {
    (1.0 - WIDE_WEIGHT) * (-r / s2).exp() / s2 + WIDE_WEIGHT * (-r / s2_wide).exp() / s2_wide
}

/// Draw `n` heterodyne samples from the Husimi function of a state.
pub fn sample_husimi(state: &FockState, n: usize, seed: u64) -> Result<SampleBatch> {
    sample_husimi_labeled(state, n, seed, "state")
}

/// As [`sample_husimi`] with an explicit provenance label.
pub fn sample_husimi_labeled(
    state: &FockState,
    n: usize,
    seed: u64,
    label: &str,
) -> Result<SampleBatch> {
    let sampler = QSampler::new(state)?;
    let mut points = Vec::with_capacity(n);
    let mut proposals = 0u64;
    let shards = n.div_ceil(SHARD);
    let sigma_narrow = (sampler.s2 / 2.0).sqrt(); // per-axis std
    let sigma_wide = (sampler.s2_wide / 2.0).sqrt();
    for shard in 0..shards {
        let quota = if shard + 1 == shards {
            n - shard * SHARD
        } else {
            SHARD
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(shard as u64);
        let mut got = 0usize;
        while got < quota {
            proposals += 1;
            let pick: f64 = rand::Rng::random(&mut rng);
            let sigma = if pick < WIDE_WEIGHT {
                sigma_wide
            } else {
                sigma_narrow
            };
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let alpha = C64::new(sigma * z1, sigma * z2);
            let u: f64 = rand::Rng::random(&mut rng);
            // accept iff u * bound <= Q / g = q_core e^{-r} / mix(r)
            let r2 = alpha.norm_sqr();
            let ratio = sampler.q_core(alpha) * (-r2).exp() / sampler.mixture(r2);
            if ratio > sampler.bound * (1.0 + 1e-9) {
                return Err(PhaseError::EnvelopeFailure(format!(
                    "domination violated at alpha = {alpha}: ratio {ratio} > bound {}",
                    sampler.bound
                )));
            }
            if u * sampler.bound <= ratio {
                points.push((alpha.re, alpha.im));
                got += 1;
            }
        }
    }
    Ok(SampleBatch {
        points,
        seed,
        state_ref: label.to_string(),
        rng_id: RNG_ALGORITHM.to_string(),
        acceptance_rate: if proposals == 0 {
            1.0
        } else {
            n as f64 / proposals as f64
        },
    })
}

// ---------------------------------------------------------------------------
// k-statistics
// ---------------------------------------------------------------------------

/// Unbiased cumulant estimate with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantEstimate {
    pub order: usize,
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

/// k-statistics k1..k4 from raw samples.
pub fn k_statistics(samples: &[f64]) -> Result<[f64; 4]> {
    let n = samples.len();
    if n < 5 {
        return Err(PhaseError::InsufficientSamples { need: 5, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &y in samples {
        let d = y - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let k2 = nf / (nf - 1.0) * m2;
    let k3 = nf * nf / ((nf - 1.0) * (nf - 2.0)) * m3;
    let k4 = nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2)
        / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    Ok([mean, k2, k3, k4])
}

/// Unbiased cumulant estimates for orders 1..=up_to (up_to <= 4) on one
/// quadrature projection, with analytic normal-theory standard errors.
pub fn estimate_cumulants(
    batch: &SampleBatch,
    axis: Var,
    up_to: usize,
    ctx: &AlgebraContext,
) -> Result<Vec<CumulantEstimate>> {
    if up_to < 1 || up_to > 4 {
        return Err(PhaseError::Precondition(
            "cumulant estimation supports orders 1..=4".into(),
        ));
    }
    let n = batch.n();
    if n < up_to + 1 {
        return Err(PhaseError::InsufficientSamples {
            need: up_to + 1,
            got: n,
        });
    }
    let ys = batch.quadrature(axis, ctx);
    let ks = k_statistics(&ys)?;
    let nf = n as f64;
    let k2 = ks[1];
    let degenerate = k2 <= 1e-14 * (1.0 + ks[0] * ks[0]);
    if degenerate && up_to >= 3 {
        return Err(PhaseError::Precondition(
            "degenerate batch: zero variance, higher cumulants undefined".into(),
        ));
    }
    let se = |order: usize| -> f64 {
        match order {
            1 => (k2.max(0.0) / nf).sqrt(),
            2 => (2.0 / (nf - 1.0)).sqrt() * k2.abs(),
            3 => (6.0 / nf).sqrt() * k2.max(0.0).powf(1.5),
            _ => (24.0 / nf).sqrt() * k2 * k2,
        }
    };
    Ok((1..=up_to)
        .map(|order| CumulantEstimate {
            order,
            value: ks[order - 1],
            std_error: se(order),
            n,
        })
        .collect())
}

/// Standardized kurtosis estimate `m4 = k4/k2^2 + 3` with its standard
/// error (asymptotically sqrt(24/n) near Gaussian).
pub fn estimate_m4(batch: &SampleBatch, axis: Var, ctx: &AlgebraContext) -> Result<CumulantEstimate> {
    let est = estimate_cumulants(batch, axis, 4, ctx)?;
    let k2 = est[1].value;
    let k4 = est[3].value;
    Ok(CumulantEstimate {
        order: 4,
        value: 3.0 + k4 / (k2 * k2),
        std_error: (24.0 / batch.n() as f64).sqrt(),
        n: batch.n(),
    })
}

/// Delete-block jackknife standard error of a statistic over the samples.
pub fn jackknife_std_error<F>(samples: &[f64], folds: usize, stat: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = samples.len();
    if folds < 2 || n < 2 * folds {
        return Err(PhaseError::Precondition(
            "jackknife needs at least two folds and 2*folds samples".into(),
        ));
    }
    let mut values = Vec::with_capacity(folds);
    let block = n / folds;
    for i in 0..folds {
        let lo = i * block;
        let hi = if i + 1 == folds { n } else { lo + block };
        let mut rest = Vec::with_capacity(n - (hi - lo));
        rest.extend_from_slice(&samples[..lo]);
        rest.extend_from_slice(&samples[hi..]);
        values.push(stat(&rest));
    }
    let g = folds as f64;
    let mean = values.iter().sum::<f64>() / g;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (g - 1.0) / g;
    Ok(var.sqrt())
}

// ---------------------------------------------------------------------------
// The rigidity experiment
// ---------------------------------------------------------------------------

/// One arm point of the experiment report.
#[derive(Debug, Clone, Serialize)]
pub struct ArmPoint {
    pub param: f64,
    pub dm2: f64,
    pub dm2_err: f64,
    pub dm4: f64,
    pub dm4_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Sampled rigidity experiment: cubic arm (gamma grid), squeezing control
/// arm (r grid), and the linear fit of dm4 against dm2 on the cubic arm.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub n: usize,
    pub seed: u64,
    pub t: f64,
    pub arms: Vec<ArmPoint>,
    pub control: Vec<ArmPoint>,
    pub fit: FitReport,
}

/// Run the full sampled experiment on the p-quadrature.
///
/// For each gamma the vacuum is evolved under `gamma x^3` for time `t`,
/// sampled, and the deviations of the Husimi variance and standardized
/// kurtosis from their vacuum values are estimated with errors. The
/// squeezing control arm does the same under `x p` evolution (r grid),
/// where rigidity demands dm4 = 0.
pub fn rigidity_experiment(
    ctx: &AlgebraContext,
    gamma_grid: &[f64],
    r_grid: &[f64],
    t: f64,
    n: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if gamma_grid.is_empty() && r_grid.is_empty() {
        return Err(PhaseError::Precondition("empty experiment grids".into()));
    }
    ctx.ensure_quantum()?;
    if ctx.modes() != 1 {
        return Err(PhaseError::Precondition(
            "experiment is single-mode".into(),
        ));
    }
    let hbar = ctx.hbar_f64();
    let d = 64usize;
    let base_m2 = hbar; // Husimi p-variance of vacuum
    let base_m4 = 3.0;

    let mut arms = Vec::with_capacity(gamma_grid.len());
    for (i, &gamma) in gamma_grid.iter().enumerate() {
        let h = cubic_hamiltonian(ctx, gamma);
        let op = weyl_quantize(&h, d)?;
        let state = evolve(&FockState::vacuum(d), &op, t)?;
        let batch = sample_husimi_labeled(
            &state,
            n,
            seed.wrapping_add(i as u64),
            &format!("cubic-evolved gamma={gamma} t={t}"),
        )?;
        arms.push(arm_point(&batch, gamma, base_m2, base_m4, ctx)?);
    }

    let mut control = Vec::with_capacity(r_grid.len());
    for (i, &r) in r_grid.iter().enumerate() {
        let h = PhasePolynomial::x(ctx).mul(&PhasePolynomial::p(ctx))?;
        let op = weyl_quantize(&h, d)?;
        let state = evolve(&FockState::vacuum(d), &op, r)?;
        let batch = sample_husimi_labeled(
            &state,
            n,
            seed.wrapping_add(1000 + i as u64),
            &format!("squeezed r={r}"),
        )?;
        // squeezing changes m2; the control compares m4 against 3 and m2
        // against the squeezed Husimi variance
        let squeezed_m2 = hbar / 2.0 * (-2.0 * r).exp() + hbar / 2.0;
        control.push(arm_point(&batch, r, squeezed_m2, base_m4, ctx)?);
    }

    let fit = linear_fit(
        &arms.iter().map(|a| a.dm2).collect::<Vec<_>>(),
        &arms.iter().map(|a| a.dm4).collect::<Vec<_>>(),
    );

    Ok(ExperimentReport {
        schema: crate::SCHEMA_VERSION.to_string(),
        n,
        seed,
        t,
        arms,
        control,
        fit,
    })
}

use crate::poly::PhasePolynomial;

/// `gamma x^3` with gamma snapped to an exact rational (the sampled layer
/// is floating point anyway).
fn cubic_hamiltonian(ctx: &AlgebraContext, gamma: f64) -> PhasePolynomial {
    let denom = 1_000_000i64;
    let num = (gamma * denom as f64).round() as i64;
    PhasePolynomial::x(ctx).pow(3).scale_rat(&rat(num, denom))
}

fn arm_point(
    batch: &SampleBatch,
    param: f64,
    base_m2: f64,
    base_m4: f64,
    ctx: &AlgebraContext,
) -> Result<ArmPoint> {
    let est = estimate_cumulants(batch, Var::P(0), 4, ctx)?;
    let m4 = estimate_m4(batch, Var::P(0), ctx)?;
    Ok(ArmPoint {
        param,
        dm2: est[1].value - base_m2,
        dm2_err: est[1].std_error,
        dm4: m4.value - base_m4,
        dm4_err: m4.std_error,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> FitReport {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return FitReport {
            slope: 0.0,
            intercept: ys.first().copied().unwrap_or(0.0),
            r2: 0.0,
        };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if sxx > 0.0 && syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    FitReport {
        slope,
        intercept,
        r2,
    }
}
