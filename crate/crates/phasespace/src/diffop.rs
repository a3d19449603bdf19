//! Differential operators on phase-space distributions.
//!
//! A [`DiffOperator`] is a finite sum `sum_a c_a(x, p) d^a` with
//! [`PhasePolynomial`] coefficients, the concrete representation of every
//! evolution generator in this crate. Composition, commutators and formal
//! adjoints stay inside the representation, so statements like "this
//! generator terminates at second order" are decidable.
//!
//! Star multiplication operators are realized by Bopp shifts: the operator
//! for `W -> f * W` substitutes `x -> x + (i hbar/2) d_p`,
//! `p -> p - (i hbar/2) d_x` into `f` (Weyl-ordered in the shifted
//! arguments), which expands to the closed bidifferential form used below.

use crate::context::AlgebraContext;
use crate::poly::{multi_indices, Multi, PhasePolynomial, Var};
use crate::rational::{factorial, GaussRat, Rat};
use crate::{PhaseError, Result};
use num::traits::One;
use num::Zero;
use std::collections::BTreeMap;
use std::fmt;

/// Differential operator with polynomial coefficients, in canonical form:
/// no stored coefficient polynomial is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOperator {
    ctx: AlgebraContext,
    entries: BTreeMap<Multi, PhasePolynomial>,
}

impl DiffOperator {
    pub fn zero(ctx: &AlgebraContext) -> Self {
        DiffOperator {
            ctx: ctx.clone(),
            entries: BTreeMap::new(),
        }
    }

    /// The identity (multiplication by one).
    pub fn identity(ctx: &AlgebraContext) -> Self {
        Self::multiplication(&PhasePolynomial::one(ctx))
    }

    /// Pure multiplication operator by a polynomial.
    pub fn multiplication(f: &PhasePolynomial) -> Self {
        let mut op = Self::zero(f.context());
        op.add_entry(Multi::zeros(f.context().vars()), f.clone());
        op
    }

    /// The bare derivative `d^orders`.
    pub fn derivative(ctx: &AlgebraContext, orders: Multi) -> Self {
        let mut op = Self::zero(ctx);
        op.add_entry(orders, PhasePolynomial::one(ctx));
        op
    }

    /// Single first derivative in one variable.
    pub fn partial(ctx: &AlgebraContext, v: Var) -> Self {
        Self::derivative(ctx, Multi::unit(ctx.vars(), v.flat(ctx.modes())))
    }

    pub fn context(&self) -> &AlgebraContext {
        &self.ctx
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Multi, &PhasePolynomial)> {
        self.entries.iter()
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn coefficient(&self, orders: &Multi) -> PhasePolynomial {
        self.entries
            .get(orders)
            .cloned()
            .unwrap_or_else(|| PhasePolynomial::zero(&self.ctx))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// All coefficient polynomials real?
    pub fn is_real(&self) -> bool {
        self.entries.values().all(|c| c.is_real())
    }

    /// Maximum total derivative order; 0 for pure multiplication operators
    /// and -1 for the zero operator.
    pub fn differential_order(&self) -> i64 {
        self.entries
            .keys()
            .map(|m| m.total() as i64)
            .max()
            .unwrap_or(-1)
    }

    /// Maximum degree over coefficient polynomials; -1 for the zero operator.
    pub fn coefficient_degree(&self) -> i64 {
        self.entries
            .values()
            .map(|c| c.degree())
            .max()
            .unwrap_or(-1)
    }

    pub fn add_entry(&mut self, orders: Multi, coeff: PhasePolynomial) {
        if coeff.is_zero() {
            return;
        }
        match self.entries.entry(orders) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff).expect("same context");
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let mut out = self.clone();
        for (m, c) in &other.entries {
            out.add_entry(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        DiffOperator {
            ctx: self.ctx.clone(),
            entries: self
                .entries
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ctx);
        }
        DiffOperator {
            ctx: self.ctx.clone(),
            entries: self
                .entries
                .iter()
                .map(|(m, k)| (m.clone(), k.scale(c)))
                .collect(),
        }
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        self.scale(&GaussRat::from_rat(r.clone()))
    }

    /// Exact action on a polynomial.
    pub fn apply(&self, f: &PhasePolynomial) -> Result<PhasePolynomial> {
        self.ctx.ensure_same(f.context())?;
        let mut out = PhasePolynomial::zero(&self.ctx);
        for (orders, coeff) in &self.entries {
            let df = f.partial_multi(orders);
            if df.is_zero() {
                continue;
            }
            out = out.add(&coeff.mul(&df)?)?;
        }
        Ok(out)
    }

    /// Operator composition `self . other` via the Leibniz rule:
    ///
    /// `c d^a . e d^b = sum_{g <= a} C(a, g) c (d^{a-g} e) d^{g+b}`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let mut out = Self::zero(&self.ctx);
        for (a, c) in &self.entries {
            for (b, e) in &other.entries {
                for g in sub_multi_indices(a) {
                    let de = e.partial_multi(&Multi(
                        a.0.iter().zip(&g.0).map(|(ai, gi)| ai - gi).collect(),
                    ));
                    if de.is_zero() {
                        continue;
                    }
                    let mut coeff = Rat::one();
                    for (ai, gi) in a.0.iter().zip(&g.0) {
                        coeff *= crate::rational::binomial(*ai, *gi);
                    }
                    out.add_entry(g.add(b), c.mul(&de)?.scale_rat(&coeff));
                }
            }
        }
        Ok(out)
    }

    /// `self . other - other . self` in canonical form.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// Formal adjoint with respect to the phase-space pairing
    /// `<f, L g> = <L^t f, g>`: each entry `c d^a` maps to
    /// `(-1)^{|a|} d^a . (c .)`, re-expanded to canonical form.
    pub fn formal_adjoint(&self) -> Self {
        let mut out = Self::zero(&self.ctx);
        for (a, c) in &self.entries {
            // (-1)^{|a|} d^a (c g) = (-1)^{|a|} sum_{g<=a} C(a,g) (d^{a-g} c) d^g
            let sign = if a.total() % 2 == 1 { -1i64 } else { 1 };
            for g in sub_multi_indices(a) {
                let dc = c.partial_multi(&Multi(
                    a.0.iter().zip(&g.0).map(|(ai, gi)| ai - gi).collect(),
                ));
                if dc.is_zero() {
                    continue;
                }
                let mut coeff = Rat::from_integer(sign.into());
                for (ai, gi) in a.0.iter().zip(&g.0) {
                    coeff *= crate::rational::binomial(*ai, *gi);
                }
                out.add_entry(g, dc.scale_rat(&coeff));
            }
        }
        out
    }
}

/// All multi-indices `g` with `g <= a` componentwise.
fn sub_multi_indices(a: &Multi) -> Vec<Multi> {
    let mut out = vec![Multi(vec![])];
    for &ai in &a.0 {
        let mut next = Vec::with_capacity(out.len() * (ai as usize + 1));
        for prefix in &out {
            for gi in 0..=ai {
                let mut v = prefix.0.clone();
                v.push(gi);
                next.push(Multi(v));
            }
        }
        out = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Star multiplication operators (Bopp shifts) and evolution generators.
// ---------------------------------------------------------------------------

/// The operator realizing `W -> f * W` (left star multiplication):
///
/// `sum_{k,l} (i hbar/2)^{|k|+|l|} (-1)^{|l|} / (k! l!)
///  (d_x^k d_p^l f) d_p^k d_x^l`.
pub fn star_left(f: &PhasePolynomial) -> DiffOperator {
    star_operator(f, false)
}

/// The operator realizing `W -> W * f` (right star multiplication); same
/// series with the opposite Bopp-shift signs, i.e. `(-1)^{|k|}` in place of
/// `(-1)^{|l|}`.
pub fn star_right(f: &PhasePolynomial) -> DiffOperator {
    star_operator(f, true)
}

fn star_operator(f: &PhasePolynomial, right: bool) -> DiffOperator {
    let ctx = f.context().clone();
    let n = ctx.modes();
    let mut out = DiffOperator::zero(&ctx);
    let deg = f.degree();
    if deg < 0 {
        return out;
    }
    let hbar_half = ctx.hbar() / Rat::from_integer(2.into());
    for m in 0..=deg as u32 {
        let mut pref = GaussRat::i_pow(m);
        let mut hpow = Rat::one();
        for _ in 0..m {
            hpow *= &hbar_half;
        }
        pref = pref.scale(&hpow);
        if m > 0 && pref.is_zero() {
            break;
        }
        for split in multi_indices(2 * n, m) {
            let k = Multi(split.0[..n].to_vec()); // x-derivatives on f
            let l = Multi(split.0[n..].to_vec()); // p-derivatives on f
            let mut orders = vec![0u32; 2 * n];
            orders[..n].copy_from_slice(&l.0); // d_x^l acting on W
            orders[n..].copy_from_slice(&k.0); // d_p^k acting on W
            let mut df_orders = vec![0u32; 2 * n];
            df_orders[..n].copy_from_slice(&k.0);
            df_orders[n..].copy_from_slice(&l.0);
            let df = f.partial_multi(&Multi(df_orders));
            if df.is_zero() {
                continue;
            }
            let parity = if right { k.total() } else { l.total() };
            let mut coeff = pref.clone();
            if parity % 2 == 1 {
                coeff = -coeff;
            }
            let mut denom = Rat::one();
            for &e in k.0.iter().chain(&l.0) {
                denom *= factorial(e);
            }
            coeff = coeff.scale(&denom.recip());
            out.add_entry(Multi(orders), df.scale(&coeff));
        }
    }
    out
}

/// Evolution generator of a real Hamiltonian symbol on the Wigner function:
/// `L_H = (star_left(H) - star_right(H)) / (i hbar)`, whose leading term is
/// the Poisson bracket `{H, .}`.
///
/// The division by `i hbar` is carried out term by term (every surviving
/// series term holds an odd power of `i hbar / 2`), so the construction is
/// exact and also valid in the classical (hbar = 0) context, where it
/// degenerates to the Hamiltonian vector field.
pub fn generator_of(h: &PhasePolynomial) -> Result<DiffOperator> {
    if !h.is_real() {
        return Err(PhaseError::NonRealCoefficients(format!(
            "Hamiltonian symbol must be real, got {h}"
        )));
    }
    let ctx = h.context().clone();
    let n = ctx.modes();
    let mut out = DiffOperator::zero(&ctx);
    let deg = h.degree();
    if deg < 1 {
        return Ok(out); // constants generate no flow
    }
    let hbar_half = ctx.hbar() / Rat::from_integer(2.into());
    let mut m = 1u32;
    while m as i64 <= deg {
        // ((i hbar/2)^m [(-1)^{|l|} - (-1)^{|k|}]) / (i hbar)
        //   = (-1)^{(m-1)/2} (hbar/2)^{m-1} (-1)^{|l|}   for odd m
        let mut pref = Rat::one();
        for _ in 0..(m - 1) {
            pref *= &hbar_half;
        }
        if ((m - 1) / 2) % 2 == 1 {
            pref = -pref;
        }
        if m > 1 && pref.is_zero() {
            break;
        }
        for split in multi_indices(2 * n, m) {
            let k = Multi(split.0[..n].to_vec());
            let l = Multi(split.0[n..].to_vec());
            let mut df_orders = vec![0u32; 2 * n];
            df_orders[..n].copy_from_slice(&k.0);
            df_orders[n..].copy_from_slice(&l.0);
            let dh = h.partial_multi(&Multi(df_orders));
            if dh.is_zero() {
                continue;
            }
            let mut orders = vec![0u32; 2 * n];
            orders[..n].copy_from_slice(&l.0);
            orders[n..].copy_from_slice(&k.0);
            let mut coeff = pref.clone();
            if l.total() % 2 == 1 {
                coeff = -coeff;
            }
            for &e in k.0.iter().chain(&l.0) {
                coeff /= factorial(e);
            }
            out.add_entry(Multi(orders), dh.scale_rat(&coeff));
        }
        m += 2;
    }
    Ok(out)
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        let modes = self.ctx.modes();
        let mut first = true;
        for (orders, coeff) in &self.entries {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if orders.is_zero() {
                write!(f, "[{coeff}]")?;
                continue;
            }
            write!(f, "[{coeff}]")?;
            for (idx, &e) in orders.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let var = if idx < modes {
                    Var::X(idx)
                } else {
                    Var::P(idx - modes)
                };
                if e == 1 {
                    write!(f, " d{}", var.name(modes))?;
                } else {
                    write!(f, " d{}^{}", var.name(modes), e)?;
                }
            }
        }
        Ok(())
    }
}

impl DiffOperator {
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(m, c)| serde_json::json!([m.0, c.to_json()["terms"]]))
            .collect();
        serde_json::json!({
            "modes": self.ctx.modes(),
            "order": self.differential_order(),
            "entries": entries,
        })
    }
}
