//! Open-dynamics extension: phase-space generators of Lindblad master
//! equations.
//!
//! The dissipator of a jump symbol `L` acts on Wigner functions as
//!
//! `D[L] = star_left(L) . star_right(conj L)
//!         - 1/2 star_left(conj L * L) - 1/2 star_right(conj L * L)`
//!
//! (star products throughout; left and right multiplications commute), and
//! the full generator adds the Hamiltonian part. The resulting operator is
//! exactly real, trace preserving as a symbolic identity, and its
//! Kramers-Moyal differential order classifies hierarchy preservation for
//! channels the same way degree counting does for closed flows.

use crate::diffop::{generator_of, star_left, star_right, DiffOperator};
use crate::hierarchy::{build_ode_system, closure_report, MomentODESystem};
use crate::poly::PhasePolynomial;
use crate::rational::Rat;
use crate::{PhaseError, Result};
use num::traits::Signed;

/// A Lindblad specification: real Hamiltonian symbol plus rated jump
/// symbols (complex coefficients allowed).
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub hamiltonian: PhasePolynomial,
    pub jumps: Vec<(Rat, PhasePolynomial)>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: PhasePolynomial, jumps: Vec<(Rat, PhasePolynomial)>) -> Result<Self> {
        if !hamiltonian.is_real() {
            return Err(PhaseError::NonRealCoefficients(
                "Lindblad Hamiltonian must be real".into(),
            ));
        }
        for (rate, symbol) in &jumps {
            if !rate.is_positive() {
                return Err(PhaseError::Precondition(format!(
                    "jump rates must be positive, got {rate}"
                )));
            }
            hamiltonian.context().ensure_same(symbol.context())?;
        }
        Ok(LindbladSpec { hamiltonian, jumps })
    }

    pub fn max_jump_degree(&self) -> i64 {
        self.jumps.iter().map(|(_, l)| l.degree()).max().unwrap_or(-1)
    }

    /// Gaussian channel: quadratic Hamiltonian, at most linear jumps.
    pub fn is_gaussian(&self) -> bool {
        self.hamiltonian.degree() <= 2 && self.max_jump_degree() <= 1
    }
}

/// Assemble the full phase-space generator of the master equation.
pub fn dissipator_generator(spec: &LindbladSpec) -> Result<DiffOperator> {
    let mut total = generator_of(&spec.hamiltonian)?;
    for (rate, l) in &spec.jumps {
        let lbar = l.conj();
        let sandwich = star_left(l).compose(&star_right(&lbar))?;
        let lbar_l = lbar.star_product(l)?;
        let half = Rat::new(1.into(), 2.into());
        let anti = star_left(&lbar_l)
            .add(&star_right(&lbar_l))?
            .scale_rat(&half);
        total = total.add(&sandwich.sub(&anti)?.scale_rat(rate))?;
    }
    Ok(total)
}

/// Channel classification record.
#[derive(Debug, Clone)]
pub struct ChannelClassification {
    /// Kramers-Moyal differential order of the assembled generator.
    pub order: i64,
    /// Order <= 2 (Fokker-Planck type).
    pub hierarchy_preserving: bool,
    /// Quadratic Hamiltonian with at most linear jumps.
    pub gaussian: bool,
    /// Whether the order-2 moment block closes.
    pub order2_closed: bool,
    /// A Gaussian channel is always preserving; the converse can fail on
    /// exceptional nonlinear cancellations. For any real (Hermitian) jump
    /// symbol `f` the dissipator assembles to the squared drift
    /// `(hbar^2/2) L_f . L_f`, so every real quadratic jump - number
    /// dissipation included - is an order-2 channel with closed moment
    /// blocks. Flagged here.
    pub exceptional_cancellation: bool,
}

pub fn classify_channel(spec: &LindbladSpec) -> Result<ChannelClassification> {
    let generator = dissipator_generator(spec)?;
    let order = generator.differential_order();
    let sys = build_ode_system(&generator, 2)?;
    let closed = closure_report(&sys)?.closed_at_two;
    let gaussian = spec.is_gaussian();
    let preserving = order <= 2 && closed;
    Ok(ChannelClassification {
        order,
        hierarchy_preserving: preserving,
        gaussian,
        order2_closed: closed,
        exceptional_cancellation: preserving && !gaussian,
    })
}

impl ChannelClassification {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order,
            "hierarchy_preserving": self.hierarchy_preserving,
            "gaussian": self.gaussian,
            "order2_closed": self.order2_closed,
            "exceptional_cancellation": self.exceptional_cancellation,
        })
    }
}

/// Moment ODE system of the open dynamics (reuses the hierarchy
/// synthesizer on the assembled generator).
pub fn open_moment_system(spec: &LindbladSpec, max_order: u32) -> Result<MomentODESystem> {
    build_ode_system(&dissipator_generator(spec)?, max_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::AlgebraContext;
    use crate::hierarchy::{moment_derivative, MomentIndex};
    use crate::linalg::C64;
    use crate::poly::{Multi, PhasePolynomial, Var};
    use crate::quantize::{ladder, weyl_quantize, FockState};
    use crate::rational::{rat, GaussRat};
    use approx::assert_relative_eq;
    use num::traits::Zero;
    use std::collections::BTreeMap;

    // hbar = 1/2 makes sqrt(2 hbar) = 1, so x + i p is exactly the
    // alpha-symbol and rates carry their textbook normalization
    fn ctx_half() -> AlgebraContext {
        AlgebraContext::with_hbar(1, rat(1, 2)).unwrap()
    }

    fn x(c: &AlgebraContext) -> PhasePolynomial {
        PhasePolynomial::x(c)
    }

    fn p(c: &AlgebraContext) -> PhasePolynomial {
        PhasePolynomial::p(c)
    }

    fn alpha_symbol(c: &AlgebraContext) -> PhasePolynomial {
        x(c).add(&p(c).scale(&GaussRat::i())).unwrap()
    }

    /// Weyl symbol of the number operator: (x^2 + p^2) / (2 hbar) - 1/2.
    fn number_symbol(c: &AlgebraContext) -> PhasePolynomial {
        let two_hbar = c.hbar() * Rat::from_integer(2.into());
        x(c).pow(2)
            .add(&p(c).pow(2))
            .unwrap()
            .scale_rat(&two_hbar.recip())
            .sub(&PhasePolynomial::constant(c, GaussRat::from_rat(rat(1, 2))))
            .unwrap()
    }

    fn midx(exps: &[u32]) -> MomentIndex {
        MomentIndex(Multi(exps.to_vec()))
    }

    #[test]
    fn damped_oscillator_has_textbook_form() {
        // D[x + i p] at hbar = 1/2, rate 1:
        // 2 hbar [1 + (x d_x + p d_p)/2 + (hbar/4) Lap]
        let c = ctx_half();
        let spec = LindbladSpec::new(
            PhasePolynomial::zero(&c),
            vec![(Rat::from_integer(1.into()), alpha_symbol(&c))],
        )
        .unwrap();
        let d = dissipator_generator(&spec).unwrap();
        assert!(d.is_real());
        assert_eq!(d.differential_order(), 2);
        // kappa_eff = 2 hbar = 1
        assert_eq!(
            d.coefficient(&Multi(vec![0, 0])),
            PhasePolynomial::one(&c)
        );
        assert_eq!(
            d.coefficient(&Multi(vec![1, 0])),
            x(&c).scale_rat(&rat(1, 2))
        );
        assert_eq!(
            d.coefficient(&Multi(vec![0, 1])),
            p(&c).scale_rat(&rat(1, 2))
        );
        // diffusion kappa_eff * hbar / 4 = 1/8 on both axes
        assert_eq!(
            d.coefficient(&Multi(vec![2, 0])),
            PhasePolynomial::constant(&c, GaussRat::from_rat(rat(1, 8)))
        );
        assert_eq!(
            d.coefficient(&Multi(vec![0, 2])),
            PhasePolynomial::constant(&c, GaussRat::from_rat(rat(1, 8)))
        );
        assert_eq!(d.num_entries(), 5);
    }

    #[test]
    fn damped_oscillator_moments_close_at_order_two() {
        let c = ctx_half();
        // H = x^2 + p^2 adds rotation on top of the kappa/2 decay
        let spec = LindbladSpec::new(
            x(&c).pow(2).add(&p(&c).pow(2)).unwrap(),
            vec![(Rat::from_integer(1.into()), alpha_symbol(&c))],
        )
        .unwrap();
        let gen = dissipator_generator(&spec).unwrap();
        // d<x>/dt = -(kappa/2)<x> + 2<p>
        let rhs = moment_derivative(&gen, &midx(&[1, 0])).unwrap();
        let as_map: BTreeMap<_, _> = rhs.iter().map(|(c, m)| (m.clone(), c.clone())).collect();
        assert_eq!(as_map[&midx(&[1, 0])], GaussRat::from_rat(rat(-1, 2)));
        assert_eq!(as_map[&midx(&[0, 1])], GaussRat::from_int(2));
        // full order-2 block closes
        let sys = open_moment_system(&spec, 2).unwrap();
        assert!(closure_report(&sys).unwrap().closed_at_two);
    }

    #[test]
    fn number_jump_assembles_to_exact_phase_diffusion() {
        // D[n-symbol] = (1/2) (x d_p - p d_x)^2, an exceptional
        // order-2 cancellation for a degree-2 jump (independent of hbar)
        for c in [ctx_half(), AlgebraContext::new(1).unwrap()] {
            let spec = LindbladSpec::new(
                PhasePolynomial::zero(&c),
                vec![(Rat::from_integer(1.into()), number_symbol(&c))],
            )
            .unwrap();
            let d = dissipator_generator(&spec).unwrap();
            let j = DiffOperator::multiplication(&x(&c))
                .compose(&DiffOperator::partial(&c, Var::P(0)))
                .unwrap()
                .sub(
                    &DiffOperator::multiplication(&p(&c))
                        .compose(&DiffOperator::partial(&c, Var::X(0)))
                        .unwrap(),
                )
                .unwrap();
            let half_j2 = j.compose(&j).unwrap().scale_rat(&rat(1, 2));
            assert_eq!(d, half_j2);
            assert_eq!(d.differential_order(), 2);

            let cls = classify_channel(&spec).unwrap();
            assert!(!cls.gaussian);
            assert!(cls.order2_closed);
            assert!(cls.hierarchy_preserving);
            assert!(cls.exceptional_cancellation);
        }
    }

    #[test]
    fn hermitian_jumps_assemble_to_squared_drift() {
        // D[f] = -(1/2)[f, [f, .]]_star = (hbar^2/2) L_f . L_f for any real
        // symbol f; for quadratic f the drift is degree preserving, which
        // is exactly why those channels close at every order
        let c = ctx_half();
        let hbar2_half = {
            let h = c.hbar();
            (h * h) / Rat::from_integer(2.into())
        };
        for f in [
            number_symbol(&c),
            x(&c).pow(2),
            x(&c).mul(&p(&c)).unwrap(),
            x(&c).pow(3), // cubic: squared drift too, but order 6 now
        ] {
            let spec = LindbladSpec::new(
                PhasePolynomial::zero(&c),
                vec![(Rat::from_integer(1.into()), f.clone())],
            )
            .unwrap();
            let d = dissipator_generator(&spec).unwrap();
            let lf = generator_of(&f).unwrap();
            let want = lf.compose(&lf).unwrap().scale_rat(&hbar2_half);
            assert_eq!(d, want, "squared-drift identity failed for f = {f}");
        }
    }

    #[test]
    fn two_photon_jump_breaks_hierarchy() {
        let c = ctx_half();
        let a2 = alpha_symbol(&c).pow(2);
        let spec = LindbladSpec::new(
            PhasePolynomial::zero(&c),
            vec![(Rat::from_integer(1.into()), a2)],
        )
        .unwrap();
        let d = dissipator_generator(&spec).unwrap();
        assert!(d.is_real());
        assert!(d.differential_order() >= 3);
        let cls = classify_channel(&spec).unwrap();
        assert!(!cls.gaussian);
        assert!(!cls.hierarchy_preserving);
        // order-2 equations reference order-3 moments
        let sys = open_moment_system(&spec, 2).unwrap();
        assert!(!closure_report(&sys).unwrap().closed_at_two);
    }

    #[test]
    fn dissipator_free_spec_reduces_to_hamiltonian_generator() {
        let c = ctx_half();
        let h = x(&c).pow(2).add(&p(&c).pow(2)).unwrap();
        let spec = LindbladSpec::new(h.clone(), vec![]).unwrap();
        assert_eq!(
            dissipator_generator(&spec).unwrap(),
            generator_of(&h).unwrap()
        );
        // cubic H with no jumps classifies like the closed system
        let spec = LindbladSpec::new(x(&c).pow(3), vec![]).unwrap();
        let cls = classify_channel(&spec).unwrap();
        assert_eq!(cls.order, 3);
        assert!(!cls.hierarchy_preserving);
    }

    #[test]
    fn reality_and_trace_preservation_over_battery() {
        let c = ctx_half();
        let batteries: Vec<LindbladSpec> = vec![
            LindbladSpec::new(
                x(&c).pow(2),
                vec![(rat(1, 3), alpha_symbol(&c))],
            )
            .unwrap(),
            LindbladSpec::new(
                x(&c).mul(&p(&c)).unwrap(),
                vec![
                    (rat(2, 1), alpha_symbol(&c).conj()),
                    (rat(1, 2), x(&c).scale(&GaussRat::new(rat(1, 2), rat(-3, 4)))),
                ],
            )
            .unwrap(),
            LindbladSpec::new(
                PhasePolynomial::zero(&c),
                vec![(rat(1, 1), number_symbol(&c))],
            )
            .unwrap(),
            LindbladSpec::new(
                x(&c).pow(3),
                vec![(rat(1, 5), alpha_symbol(&c).pow(2))],
            )
            .unwrap(),
        ];
        for spec in &batteries {
            let d = dissipator_generator(spec).unwrap();
            assert!(d.is_real(), "complex coefficients survived cancellation");
            // trace preservation: dM_0/dt = 0 as a symbolic identity
            let rhs = moment_derivative(&d, &midx(&[0, 0])).unwrap();
            assert!(rhs.is_empty(), "M_0 equation must vanish identically");
        }
    }

    #[test]
    fn gaussian_specs_are_order_two_and_closed() {
        let c = ctx_half();
        // linear jumps with assorted complex coefficients
        let jumps = [
            alpha_symbol(&c),
            x(&c).scale(&GaussRat::new(rat(1, 1), rat(1, 2))),
            p(&c)
                .scale(&GaussRat::i())
                .add(&PhasePolynomial::constant(&c, GaussRat::from_int(1)))
                .unwrap(),
        ];
        let hams = [
            x(&c).pow(2).add(&p(&c).pow(2)).unwrap(),
            x(&c).mul(&p(&c)).unwrap(),
            x(&c),
        ];
        for h in &hams {
            for l in &jumps {
                let spec =
                    LindbladSpec::new(h.clone(), vec![(rat(1, 2), l.clone())]).unwrap();
                let cls = classify_channel(&spec).unwrap();
                assert!(cls.gaussian);
                assert_eq!(cls.order, 2, "H={h}, L={l}");
                assert!(cls.order2_closed);
                assert!(cls.hierarchy_preserving);
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let c = ctx_half();
        assert!(LindbladSpec::new(
            x(&c).scale(&GaussRat::i()),
            vec![]
        )
        .is_err());
        assert!(LindbladSpec::new(
            x(&c),
            vec![(rat(-1, 2), alpha_symbol(&c))]
        )
        .is_err());
        let other = AlgebraContext::new(1).unwrap();
        assert!(LindbladSpec::new(
            x(&c),
            vec![(rat(1, 2), PhasePolynomial::x(&other))]
        )
        .is_err());
    }

    /// Ladder-algebra cross-check: the symbolic moment equations evaluated
    /// on a test state's oracle moments must match the adjoint master
    /// equation computed with truncated matrices.
    #[test]
    fn moment_equations_match_ladder_algebra() {
        let c = ctx_half();
        let d = 40usize;
        let state = FockState::coherent(C64::new(0.4, 0.2), d);

        let jump_symbols = [alpha_symbol(&c), number_symbol(&c), alpha_symbol(&c).pow(2)];
        let h = x(&c).pow(2).add(&p(&c).pow(2)).unwrap();
        let h_mat = weyl_quantize(&h, d).unwrap().matrix;
        let hbar = c.hbar_f64();

        for ls in &jump_symbols {
            let rate = 0.7;
            let spec = LindbladSpec::new(h.clone(), vec![(rat(7, 10), ls.clone())]).unwrap();
            let gen = dissipator_generator(&spec).unwrap();

            // jump operator as a matrix (Weyl image of its symbol)
            let l_mat = weyl_quantize_complex(ls, d);

            for target in [midx(&[1, 0]), midx(&[0, 1]), midx(&[2, 0]), midx(&[1, 1])] {
                // symbolic side: sum of coefficients times oracle moments
                let rhs = moment_derivative(&gen, &target).unwrap();
                let mut symbolic = 0.0;
                for (coeff, m) in &rhs {
                    let val =
                        crate::quantize::wigner_moment(&state, m, &c).unwrap();
                    symbolic += coeff.to_f64() * val;
                }

                // ladder side: d<A>/dt = (i/hbar)<[H, A]> +
                //   rate (<Ldag A L> - 1/2 <{Ldag L, A}>)
                let a_mat = weyl_quantize(
                    &PhasePolynomial::monomial(&c, target.0.clone(), GaussRat::one()),
                    d,
                )
                .unwrap()
                .matrix;
                let comm = &h_mat * &a_mat - &a_mat * &h_mat;
                let mut ladder_rhs =
                    (state.expectation(&comm) * C64::new(0.0, 1.0 / hbar)).re;
                let ldag = l_mat.adjoint();
                let ldl = &ldag * &l_mat;
                let sandwich = &ldag * &a_mat * &l_mat;
                let acomm = &ldl * &a_mat + &a_mat * &ldl;
                ladder_rhs += rate
                    * (state.expectation(&sandwich).re
                        - 0.5 * state.expectation(&acomm).re);

                assert_relative_eq!(symbolic, ladder_rhs, epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    /// Weyl image of a complex symbol (linearity over the two real parts).
    fn weyl_quantize_complex(
        f: &PhasePolynomial,
        d: usize,
    ) -> nalgebra::DMatrix<C64> {
        // split into real and imaginary real-coefficient parts
        let re = f.add(&f.conj()).unwrap().scale_rat(&rat(1, 2));
        let im = f
            .sub(&f.conj())
            .unwrap()
            .scale(&GaussRat::new(Rat::zero(), rat(-1, 2)));
        let wre = weyl_quantize(&re, d).unwrap().matrix;
        let wim = weyl_quantize(&im, d).unwrap().matrix;
        wre + wim * C64::new(0.0, 1.0)
    }

    #[test]
    fn number_jump_moment_flow_matches_dephasing() {
        // under pure number dissipation: d<x>/dt = -kappa/2 <x> (with the
        // 1/2 from the phase-diffusion form), energy conserved
        let c = ctx_half();
        let spec = LindbladSpec::new(
            PhasePolynomial::zero(&c),
            vec![(Rat::from_integer(1.into()), number_symbol(&c))],
        )
        .unwrap();
        let gen = dissipator_generator(&spec).unwrap();
        let rhs = moment_derivative(&gen, &midx(&[1, 0])).unwrap();
        assert_eq!(rhs.len(), 1);
        assert_eq!(rhs[0].0, GaussRat::from_rat(rat(-1, 2)));
        assert_eq!(rhs[0].1, midx(&[1, 0]));
        // d<x^2 + p^2>/dt = 0
        let rx2 = moment_derivative(&gen, &midx(&[2, 0])).unwrap();
        let rp2 = moment_derivative(&gen, &midx(&[0, 2])).unwrap();
        let mut sum: BTreeMap<MomentIndex, GaussRat> = BTreeMap::new();
        for (co, m) in rx2.iter().chain(rp2.iter()) {
            let entry = sum.entry(m.clone()).or_insert_with(GaussRat::zero);
            *entry += co;
        }
        assert!(sum.values().all(|v| v.is_zero()));
    }

    #[test]
    fn ladder_matrix_sanity() {
        let a = ladder(4);
        assert_relative_eq!(a[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(a[(1, 2)].re, (2f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(a[(2, 3)].re, (3f64).sqrt(), epsilon = 1e-15);
    }
}
