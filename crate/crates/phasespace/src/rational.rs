//! Exact Gaussian-rational coefficients.
//!
//! Every coefficient in the symbolic layer is an element of `Q[i]`: a pair
//! of arbitrary-precision rationals (real and imaginary part). Zero tests
//! are therefore decidable, which is what turns the rigidity statement into
//! unit tests instead of tolerance judgments.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Arbitrary-precision rational, re-exported for convenience.
pub type Rat = BigRational;

/// Build a rational from an integer pair, normalizing signs.
pub fn rat(num: i64, den: i64) -> Rat {
    assert!(den != 0, "zero denominator");
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// n! as a rational.
pub fn factorial(n: u32) -> Rat {
    let mut acc = BigInt::one();
    for k in 2..=n as u64 {
        acc *= BigInt::from(k);
    }
    Rat::from_integer(acc)
}

/// Binomial coefficient C(n, k) as a rational.
pub fn binomial(n: u32, k: u32) -> Rat {
    if k > n {
        return Rat::zero();
    }
    let mut acc = BigInt::one();
    for j in 0..k as u64 {
        acc = acc * BigInt::from(n as u64 - j) / BigInt::from(j + 1);
    }
    Rat::from_integer(acc)
}

/// Double factorial (2k-1)!! with (-1)!! = 1.
pub fn double_factorial_odd(k: u32) -> Rat {
    let mut acc = BigInt::one();
    let mut m = 2 * k as i64 - 1;
    while m > 1 {
        acc *= BigInt::from(m);
        m -= 2;
    }
    Rat::from_integer(acc)
}

/// Exact rational square root, if one exists.
///
/// Returns `Some(s)` with `s*s == r` and `s >= 0`, or `None` when `r` is not
/// a perfect square in `Q`.
pub fn rational_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let num = r.numer();
    let den = r.denom();
    let sn = num.sqrt();
    let sd = den.sqrt();
    if &(&sn * &sn) == num && &(&sd * &sd) == den {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}

/// A Gaussian rational: exact real and imaginary rational parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRat {
    pub re: Rat,
    pub im: Rat,
}

impl GaussRat {
    pub fn new(re: Rat, im: Rat) -> Self {
        GaussRat { re, im }
    }

    pub fn zero() -> Self {
        GaussRat::new(Rat::zero(), Rat::zero())
    }

    pub fn one() -> Self {
        GaussRat::new(Rat::one(), Rat::zero())
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussRat::new(Rat::zero(), Rat::one())
    }

    pub fn from_rat(re: Rat) -> Self {
        GaussRat::new(re, Rat::zero())
    }

    pub fn from_int(n: i64) -> Self {
        GaussRat::from_rat(rint(n))
    }

    /// i^k, exact.
    pub fn i_pow(k: u32) -> Self {
        match k % 4 {
            0 => GaussRat::one(),
            1 => GaussRat::i(),
            2 => -GaussRat::one(),
            _ => -GaussRat::i(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat::new(self.re.clone(), -self.im.clone())
    }

    pub fn scale(&self, r: &Rat) -> Self {
        GaussRat::new(&self.re * r, &self.im * r)
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Self {
        let norm = &self.re * &self.re + &self.im * &self.im;
        assert!(!norm.is_zero(), "division by zero GaussRat");
        GaussRat::new(&self.re / &norm, -&self.im / &norm)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = GaussRat::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.re)
    }

    pub fn to_complex(&self) -> (f64, f64) {
        (rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

/// Rational to nearest f64.
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // fall back to a scaled division for very large parts
        let n = r.numer();
        let d = r.denom();
        let shift = (n.bits() as i64 - d.bits() as i64).max(0);
        let scaled = n / (BigInt::one() << shift as usize);
        (scaled.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN))
            * 2f64.powi(shift as i32)
    })
}

impl Add for &GaussRat {
    type Output = GaussRat;
    fn add(self, rhs: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussRat {
    type Output = GaussRat;
    fn sub(self, rhs: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussRat {
    type Output = GaussRat;
    fn mul(self, rhs: &GaussRat) -> GaussRat {
        GaussRat::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Div for &GaussRat {
    type Output = GaussRat;
    fn div(self, rhs: &GaussRat) -> GaussRat {
        self * &rhs.inv()
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re, -self.im)
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re.clone(), -self.im.clone())
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, rhs: &GaussRat) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussRat> for GaussRat {
    fn sub_assign(&mut self, rhs: &GaussRat) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&GaussRat> for GaussRat {
    fn mul_assign(&mut self, rhs: &GaussRat) {
        *self = &*self * rhs;
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            if self.im.is_one() {
                return write!(f, "i");
            }
            if self.im == -Rat::one() {
                return write!(f, "-i");
            }
            return write!(f, "{}*i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "{}-{}*i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}*i", self.re, self.im)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_conjugation() {
        let a = GaussRat::new(rat(1, 2), rat(3, 4));
        let b = GaussRat::new(rat(-2, 1), rat(1, 3));
        let prod = &a * &b;
        // (1/2 + 3/4 i)(-2 + 1/3 i) = (-1 - 1/4) + (1/6 - 3/2) i
        assert_eq!(prod.re, rat(-5, 4));
        assert_eq!(prod.im, rat(-4, 3));
        let back = &prod / &b;
        assert_eq!(back, a);
        assert_eq!((&a * &a.conj()).im, Rat::zero());
    }

    #[test]
    fn i_powers_cycle() {
        assert_eq!(GaussRat::i_pow(0), GaussRat::one());
        assert_eq!(GaussRat::i_pow(1), GaussRat::i());
        assert_eq!(GaussRat::i_pow(2), -GaussRat::one());
        assert_eq!(GaussRat::i_pow(3), -GaussRat::i());
        assert_eq!(GaussRat::i_pow(6), -GaussRat::one());
    }

    #[test]
    fn sqrt_detects_perfect_squares() {
        assert_eq!(rational_sqrt(&rat(4, 9)), Some(rat(2, 3)));
        assert_eq!(rational_sqrt(&rat(1, 1)), Some(rat(1, 1)));
        assert_eq!(rational_sqrt(&rat(2, 1)), None);
        assert_eq!(rational_sqrt(&rat(-4, 9)), None);
    }

    #[test]
    fn combinatorial_helpers() {
        assert_eq!(factorial(5), rint(120));
        assert_eq!(binomial(6, 2), rint(15));
        assert_eq!(double_factorial_odd(3), rint(15)); // 5!! = 15
        assert_eq!(double_factorial_odd(0), rint(1));
    }
}
