//! Exact multivariate polynomials in canonical variables.
//!
//! A [`PhasePolynomial`] is the Weyl symbol of an observable, Hamiltonian
//! or jump operator: a finite map from exponent multi-indices to Gaussian
//! rational coefficients, in the fixed variable ordering
//! `(x_1, ..., x_N, p_1, ..., p_N)`.
//!
//! Besides ring arithmetic the module provides the Poisson bracket, the
//! full Moyal star product as a terminating bidifferential series, and the
//! Moyal bracket derived from it. All of it is exact: no floating point
//! appears anywhere in this file.

use crate::context::AlgebraContext;
use crate::rational::{factorial, GaussRat, Rat};
use crate::{PhaseError, Result};
use num::traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Identifier of one canonical variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Position of mode `i` (0-based).
    X(usize),
    /// Momentum of mode `i` (0-based).
    P(usize),
}

impl Var {
    /// Flat index in the `(x_1..x_N, p_1..p_N)` ordering.
    pub fn flat(&self, modes: usize) -> usize {
        match *self {
            Var::X(i) => {
                assert!(i < modes, "mode index out of range");
                i
            }
            Var::P(i) => {
                assert!(i < modes, "mode index out of range");
                modes + i
            }
        }
    }

    pub fn name(&self, modes: usize) -> String {
        match *self {
            Var::X(i) => {
                if modes == 1 {
                    "x".into()
                } else {
                    format!("x{}", i + 1)
                }
            }
            Var::P(i) => {
                if modes == 1 {
                    "p".into()
                } else {
                    format!("p{}", i + 1)
                }
            }
        }
    }
}

/// Exponent (or derivative-order) multi-index over the 2N variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multi(pub Vec<u32>);

impl Multi {
    pub fn zeros(len: usize) -> Self {
        Multi(vec![0; len])
    }

    pub fn unit(len: usize, idx: usize) -> Self {
        let mut v = vec![0; len];
        v[idx] = 1;
        Multi(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &Multi) -> Multi {
        Multi(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Human-readable monomial name, e.g. `x^2*p` for `[2, 1]`.
    pub fn monomial_name(&self, modes: usize) -> String {
        if self.is_zero() {
            return "1".into();
        }
        let mut parts = Vec::new();
        for (idx, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let var = if idx < modes {
                Var::X(idx)
            } else {
                Var::P(idx - modes)
            };
            if e == 1 {
                parts.push(var.name(modes));
            } else {
                parts.push(format!("{}^{}", var.name(modes), e));
            }
        }
        parts.join("*")
    }
}

/// Enumerate all multi-indices of the given length with the given total.
pub fn multi_indices(len: usize, total: u32) -> Vec<Multi> {
    fn rec(len: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Multi>) {
        if len == 1 {
            prefix.push(total);
            out.push(Multi(prefix.clone()));
            prefix.pop();
            return;
        }
        for t in 0..=total {
            prefix.push(t);
            rec(len - 1, total - t, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        if total == 0 {
            out.push(Multi(vec![]));
        }
        return out;
    }
    rec(len, total, &mut Vec::new(), &mut out);
    out
}

/// Enumerate all multi-indices of the given length with total <= cap.
pub fn multi_indices_up_to(len: usize, cap: u32) -> Vec<Multi> {
    (0..=cap).flat_map(|t| multi_indices(len, t)).collect()
}

/// Exact polynomial in the canonical variables of one context.
///
/// Canonical form: no stored coefficient is zero, so structural equality
/// is semantic equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePolynomial {
    ctx: AlgebraContext,
    terms: BTreeMap<Multi, GaussRat>,
}

impl PhasePolynomial {
    pub fn zero(ctx: &AlgebraContext) -> Self {
        PhasePolynomial {
            ctx: ctx.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: &AlgebraContext, c: GaussRat) -> Self {
        let mut poly = Self::zero(ctx);
        poly.add_term(Multi::zeros(ctx.vars()), c);
        poly
    }

    pub fn one(ctx: &AlgebraContext) -> Self {
        Self::constant(ctx, GaussRat::one())
    }

    pub fn var(ctx: &AlgebraContext, v: Var) -> Self {
        let mut poly = Self::zero(ctx);
        poly.add_term(
            Multi::unit(ctx.vars(), v.flat(ctx.modes())),
            GaussRat::one(),
        );
        poly
    }

    /// Single-mode shorthands.
    pub fn x(ctx: &AlgebraContext) -> Self {
        Self::var(ctx, Var::X(0))
    }

    pub fn p(ctx: &AlgebraContext) -> Self {
        Self::var(ctx, Var::P(0))
    }

    pub fn monomial(ctx: &AlgebraContext, exps: Multi, c: GaussRat) -> Self {
        assert_eq!(exps.len(), ctx.vars(), "exponent length mismatch");
        let mut poly = Self::zero(ctx);
        poly.add_term(exps, c);
        poly
    }

    pub fn context(&self) -> &AlgebraContext {
        &self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Multi, &GaussRat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exps: &Multi) -> GaussRat {
        self.terms.get(exps).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All coefficients real?
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.is_real())
    }

    /// Maximum total exponent; -1 for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|m| m.total() as i64)
            .max()
            .unwrap_or(-1)
    }

    /// Add a single term, keeping canonical form.
    pub fn add_term(&mut self, exps: Multi, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = &*e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        PhasePolynomial {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ctx);
        }
        PhasePolynomial {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        self.scale(&GaussRat::from_rat(r.clone()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let mut out = Self::zero(&self.ctx);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.add(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.ctx);
        for _ in 0..k {
            acc = acc.mul(self).expect("same context");
        }
        acc
    }

    /// Complex conjugate of the symbol (conjugates coefficients).
    pub fn conj(&self) -> Self {
        PhasePolynomial {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.conj()))
                .collect(),
        }
    }

    /// Exact k-th partial derivative with respect to one variable.
    pub fn partial(&self, v: Var, k: u32) -> Self {
        let idx = v.flat(self.ctx.modes());
        self.partial_flat(idx, k)
    }

    fn partial_flat(&self, idx: usize, k: u32) -> Self {
        if k == 0 {
            return self.clone();
        }
        let mut out = Self::zero(&self.ctx);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e < k {
                continue;
            }
            // falling factorial e (e-1) ... (e-k+1)
            let mut factor = Rat::one();
            for j in 0..k {
                factor *= Rat::from_integer((e - j).into());
            }
            let mut exps = m.clone();
            exps.0[idx] = e - k;
            out.add_term(exps, c.scale(&factor));
        }
        out
    }

    /// Mixed partial derivative by a full multi-index.
    pub fn partial_multi(&self, orders: &Multi) -> Self {
        let mut out = self.clone();
        for (idx, &k) in orders.0.iter().enumerate() {
            if k > 0 {
                out = out.partial_flat(idx, k);
                if out.is_zero() {
                    return out;
                }
            }
        }
        out
    }

    /// Poisson bracket, convention `{f, g} = sum_i d_x f d_p g - d_p f d_x g`.
    pub fn poisson_bracket(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let n = self.ctx.modes();
        let mut out = Self::zero(&self.ctx);
        for i in 0..n {
            let a = self
                .partial(Var::X(i), 1)
                .mul(&other.partial(Var::P(i), 1))?;
            let b = self
                .partial(Var::P(i), 1)
                .mul(&other.partial(Var::X(i), 1))?;
            out = out.add(&a)?.sub(&b)?;
        }
        Ok(out)
    }

    /// Moyal star product as its terminating bidifferential series:
    ///
    /// `f * g = sum_{k,l} (i hbar / 2)^{|k|+|l|} (-1)^{|l|} / (k! l!)
    ///          (d_x^k d_p^l f) (d_p^k d_x^l g)`
    ///
    /// with `k, l` ranging over per-mode multi-indices.
    pub fn star_product(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let n = self.ctx.modes();
        let dmin = self.degree().min(other.degree());
        if dmin < 0 {
            return Ok(Self::zero(&self.ctx));
        }
        let hbar_half = self.ctx.hbar() / Rat::from_integer(2.into());
        let mut out = Self::zero(&self.ctx);
        for m in 0..=dmin as u32 {
            // scalar prefactor i^m (hbar/2)^m
            let mut pref = GaussRat::i_pow(m);
            let mut hpow = Rat::one();
            for _ in 0..m {
                hpow *= &hbar_half;
            }
            pref = pref.scale(&hpow);
            if m > 0 && pref.is_zero() {
                break; // hbar = 0: only the m = 0 term survives
            }
            for split in multi_indices(2 * n, m) {
                let k = Multi(split.0[..n].to_vec()); // x-derivatives on f
                let l = Multi(split.0[n..].to_vec()); // p-derivatives on f
                let df = self.partial_pattern(&k, &l);
                if df.is_zero() {
                    continue;
                }
                let dg = other.partial_pattern(&l, &k);
                if dg.is_zero() {
                    continue;
                }
                let mut coeff = pref.clone();
                if l.total() % 2 == 1 {
                    coeff = -coeff;
                }
                let denom = multi_factorial(&k) * multi_factorial(&l);
                coeff = coeff.scale(&denom.recip());
                out = out.add(&df.mul(&dg)?.scale(&coeff))?;
            }
        }
        Ok(out)
    }

    /// Apply `d_x^kx d_p^kp` where `kx` indexes x-variables and `kp`
    /// p-variables (each of length N).
    fn partial_pattern(&self, kx: &Multi, kp: &Multi) -> Self {
        let n = self.ctx.modes();
        let mut orders = vec![0u32; 2 * n];
        orders[..n].copy_from_slice(&kx.0);
        orders[n..].copy_from_slice(&kp.0);
        self.partial_multi(&Multi(orders))
    }

    /// Moyal bracket, normalized so the leading term is the Poisson bracket:
    /// `{f, g}_M = (f * g - g * f) / (i hbar)`, evaluated term by term so no
    /// division by hbar ever occurs (each odd series term carries a factor
    /// `(i hbar / 2)^{2k+1}`).
    pub fn moyal_bracket(&self, other: &Self) -> Result<Self> {
        self.ctx.ensure_same(&other.ctx)?;
        let n = self.ctx.modes();
        let dmin = self.degree().min(other.degree());
        if dmin < 0 {
            return Ok(Self::zero(&self.ctx));
        }
        let hbar_half = self.ctx.hbar() / Rat::from_integer(2.into());
        let mut out = Self::zero(&self.ctx);
        let mut m = 1u32;
        while m as i64 <= dmin {
            // (i hbar/2)^{m-1} is real for odd m: (-1)^{(m-1)/2} (hbar/2)^{m-1}
            let mut pref = Rat::one();
            for _ in 0..(m - 1) {
                pref *= &hbar_half;
            }
            if ((m - 1) / 2) % 2 == 1 {
                pref = -pref;
            }
            if m > 1 && pref.is_zero() {
                break; // classical context: hbar = 0
            }
            for split in multi_indices(2 * n, m) {
                let k = Multi(split.0[..n].to_vec());
                let l = Multi(split.0[n..].to_vec());
                let df = self.partial_pattern(&k, &l);
                if df.is_zero() {
                    continue;
                }
                let dg = other.partial_pattern(&l, &k);
                if dg.is_zero() {
                    continue;
                }
                let mut coeff = pref.clone();
                if l.total() % 2 == 1 {
                    coeff = -coeff;
                }
                coeff /= multi_factorial(&k) * multi_factorial(&l);
                out = out.add(&df.mul(&dg)?.scale_rat(&coeff))?;
            }
            m += 2;
        }
        Ok(out)
    }
}

fn multi_factorial(m: &Multi) -> Rat {
    let mut acc = Rat::one();
    for &e in &m.0 {
        acc *= factorial(e);
    }
    acc
}

// ---------------------------------------------------------------------------
// Canonical textual form (the CLI expression grammar).
// ---------------------------------------------------------------------------

fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Format one coefficient as (sign, magnitude-string); the magnitude is a
/// valid grammar factor. `None` magnitude means "1" (elided before a
/// monomial).
fn format_coeff(c: &GaussRat) -> (bool, Option<String>) {
    if c.is_real() {
        let neg = c.re.is_negative();
        let a = if neg { -c.re.clone() } else { c.re.clone() };
        if a.is_one() {
            (neg, None)
        } else {
            (neg, Some(format_rat(&a)))
        }
    } else if c.re.is_zero() {
        let neg = c.im.is_negative();
        let b = if neg { -c.im.clone() } else { c.im.clone() };
        if b.is_one() {
            (neg, Some("i".into()))
        } else {
            (neg, Some(format!("{}*i", format_rat(&b))))
        }
    } else {
        // both parts nonzero: parenthesized complex literal
        let re = format_rat(&c.re);
        let im_sign = if c.im.is_negative() { "-" } else { "+" };
        let imag = c.im.abs();
        let im = if imag.is_one() {
            "i".into()
        } else {
            format!("{}*i", format_rat(&imag))
        };
        (false, Some(format!("({re}{im_sign}{im})")))
    }
}

impl fmt::Display for PhasePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest total degree first, then reverse-lex for stability
        let mut entries: Vec<_> = self.terms.iter().collect();
        entries.sort_by(|(ma, _), (mb, _)| {
            mb.total().cmp(&ma.total()).then_with(|| mb.cmp(ma))
        });
        let modes = self.ctx.modes();
        for (pos, (m, c)) in entries.iter().enumerate() {
            let (neg, mag) = format_coeff(c);
            if pos == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mono = if m.is_zero() {
                None
            } else {
                Some(m.monomial_name(modes))
            };
            match (mag, mono) {
                (Some(a), Some(b)) => write!(f, "{a}*{b}")?,
                (Some(a), None) => write!(f, "{a}")?,
                (None, Some(b)) => write!(f, "{b}")?,
                (None, None) => write!(f, "1")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON encoding: terms as [exponent-list, [num_re, den_re, num_im, den_im]].
// ---------------------------------------------------------------------------

fn bigint_json(v: &num::BigInt) -> serde_json::Value {
    use num::ToPrimitive;
    match v.to_i64() {
        Some(n) => serde_json::json!(n),
        None => serde_json::json!(v.to_string()),
    }
}

fn bigint_from_json(v: &serde_json::Value) -> Result<num::BigInt> {
    if let Some(n) = v.as_i64() {
        return Ok(num::BigInt::from(n));
    }
    if let Some(s) = v.as_str() {
        return s.parse().map_err(|_| PhaseError::Parse {
            position: 0,
            message: format!("bad integer literal {s:?}"),
        });
    }
    Err(PhaseError::Parse {
        position: 0,
        message: "expected integer or string".into(),
    })
}

impl PhasePolynomial {
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(m, c)| {
                serde_json::json!([
                    m.0,
                    [
                        bigint_json(c.re.numer()),
                        bigint_json(c.re.denom()),
                        bigint_json(c.im.numer()),
                        bigint_json(c.im.denom()),
                    ]
                ])
            })
            .collect();
        serde_json::json!({
            "modes": self.ctx.modes(),
            "hbar": [bigint_json(self.ctx.hbar().numer()), bigint_json(self.ctx.hbar().denom())],
            "terms": terms,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |msg: &str| PhaseError::Parse {
            position: 0,
            message: msg.into(),
        };
        let modes = v["modes"].as_u64().ok_or_else(|| bad("missing modes"))? as usize;
        let hb = v["hbar"].as_array().ok_or_else(|| bad("missing hbar"))?;
        let hbar = Rat::new(bigint_from_json(&hb[0])?, bigint_from_json(&hb[1])?);
        let ctx = if hbar.is_zero() {
            AlgebraContext::classical(modes)?
        } else {
            AlgebraContext::with_hbar(modes, hbar)?
        };
        let mut poly = PhasePolynomial::zero(&ctx);
        for t in v["terms"].as_array().ok_or_else(|| bad("missing terms"))? {
            let pair = t.as_array().ok_or_else(|| bad("bad term"))?;
            let exps: Vec<u32> = pair[0]
                .as_array()
                .ok_or_else(|| bad("bad exponents"))?
                .iter()
                .map(|e| e.as_u64().unwrap_or(0) as u32)
                .collect();
            if exps.len() != ctx.vars() {
                return Err(bad("exponent length mismatch"));
            }
            let c = pair[1].as_array().ok_or_else(|| bad("bad coefficient"))?;
            let coeff = GaussRat::new(
                Rat::new(bigint_from_json(&c[0])?, bigint_from_json(&c[1])?),
                Rat::new(bigint_from_json(&c[2])?, bigint_from_json(&c[3])?),
            );
            poly.add_term(Multi(exps), coeff);
        }
        Ok(poly)
    }
}
