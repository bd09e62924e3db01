//! Floating-point backends for the exact recursions.
//!
//! The recursive integrals subtract large, nearly equal terms once the
//! truncation size grows past a hundred or so samples. Everything in
//! [`crate::integrals`] is generic over [`Real`] so a run can switch from
//! native `f64` to [`DoubleDouble`] (about 106 bits of mantissa) without
//! touching the algorithm.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

/// Arithmetic backend selector for the exact evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    /// IEEE-754 binary64.
    #[default]
    Native,
    /// Unevaluated sum of two binary64 values.
    Extended,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Native => f.write_str("native"),
            Precision::Extended => f.write_str("extended"),
        }
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "native" | "f64" => Ok(Precision::Native),
            "extended" | "double-double" | "dd" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}` (expected native or extended)")),
        }
    }
}

/// Minimal real-number interface used by the recursions.
pub trait Real:
    Copy
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Unit roundoff of the backend.
    const EPSILON: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn mul_f64(self, x: f64) -> Self {
        self * Self::from_f64(x)
    }

    fn div_f64(self, x: f64) -> Self {
        self / Self::from_f64(x)
    }

    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON / 2.0;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn mul_f64(self, x: f64) -> Self {
        self * x
    }
    #[inline]
    fn div_f64(self, x: f64) -> Self {
        self / x
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

const LN2_DD: DoubleDouble = DoubleDouble { hi: 6.931_471_805_599_452_862e-1, lo: 2.319_046_813_846_299_558e-17 };

impl DoubleDouble {
    pub const fn new(hi: f64) -> Self {
        DoubleDouble { hi, lo: 0.0 }
    }

    /// Builds from two parts, renormalizing.
    pub fn from_parts(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        DoubleDouble { hi: self.hi * f, lo: self.lo * f }
    }

    fn sqr(self) -> Self {
        let (p, e) = two_prod(self.hi, self.hi);
        let e = e + 2.0 * self.hi * self.lo + self.lo * self.lo;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 } + DoubleDouble::new(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for DoubleDouble {
            #[inline]
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Real for DoubleDouble {
    const EPSILON: f64 = 4.93e-32;

    #[inline]
    fn from_f64(x: f64) -> Self {
        DoubleDouble::new(x)
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn exp(self) -> Self {
        if self.hi > 709.78 {
            return DoubleDouble::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::new(0.0);
        }
        if self.hi == 0.0 {
            return DoubleDouble::new(1.0);
        }
        // x = k ln2 + 512 r, expm1 by Taylor on r, then square nine times
        let k = (self.hi / LN2_DD.hi).round();
        let r = (self - LN2_DD.mul_f64(k)).ldexp(-9);
        let mut term = r;
        let mut s = r;
        for n in 2..30 {
            term = (term * r).div_f64(n as f64);
            s += term;
            if term.hi.abs() <= 1e-34 * s.hi.abs() {
                break;
            }
        }
        for _ in 0..9 {
            s = s.mul_f64(2.0) + s.sqr();
        }
        (s + DoubleDouble::new(1.0)).ldexp(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::new(f64::NAN);
        }
        if self.hi == 1.0 && self.lo == 0.0 {
            return DoubleDouble::new(0.0);
        }
        // one Newton step on exp(y) = x doubles the accuracy of the f64 guess
        let y = DoubleDouble::new(self.hi.ln());
        y + self * (-y).exp() - DoubleDouble::new(1.0)
    }

    #[inline]
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, e2) = two_sum(self.hi, -p);
        let e2 = e2 - e + self.lo;
        let q2 = (s + e2) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }
    }
}

/// Neumaier's compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<R: Real = f64> {
    sum: R,
    comp: R,
}

impl<R: Real> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> CompensatedSum<R> {
    pub fn new() -> Self {
        CompensatedSum { sum: R::zero(), comp: R::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> R {
        self.sum + self.comp
    }
}

impl<R: Real> FromIterator<R> for CompensatedSum<R> {
    fn from_iter<I: IntoIterator<Item = R>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `x^m / m!`, computed as a running product so intermediate values stay
/// near the final magnitude for the argument ranges used here.
#[inline]
pub fn pow_over_factorial<R: Real>(x: R, m: usize) -> R {
    let mut h = R::one();
    for j in 1..=m {
        h = (h * x).div_f64(j as f64);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::new(x)
    }

    #[test]
    fn third_is_exact_to_dd_precision() {
        let t = dd(1.0) / dd(3.0);
        let back = t * dd(3.0) - dd(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_ln_roundtrip() {
        for &x in &[-300.0, -20.5, -1.0, -1e-6, 0.3, 1.0, 2.5, 50.0, 400.0] {
            let y = dd(x).exp().ln();
            assert!((y - dd(x)).to_f64().abs() <= 1e-29 * x.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn exp_matches_f64() {
        for &x in &[-700.0, -3.3, 0.1, 1.0, 100.0, 700.0] {
            let e = dd(x).exp().to_f64();
            assert!((e / x.exp() - 1.0).abs() < 4e-16, "x = {x}");
        }
        // e to ~32 digits: 2.71828182845904523536028747135266
        let e = dd(1.0).exp();
        assert_eq!(e.hi(), std::f64::consts::E);
        assert!((e.lo() - 1.445_646_891_729_250_158e-16).abs() < 1e-30);
    }

    #[test]
    fn cancellation_survives_in_dd() {
        let big = dd(1e20);
        let x = (big + dd(1.0)) - big;
        assert_eq!(x.to_f64(), 1.0);
        assert_eq!((1e20 + 1.0) - 1e20, 0.0);
    }

    #[test]
    fn neumaier_recovers_lost_terms() {
        let mut s = CompensatedSum::<f64>::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = DoubleDouble::from_parts(1.0, 1e-20);
        let b = DoubleDouble::from_parts(1.0, 2e-20);
        assert!(a < b);
        assert!(-b < -a);
    }

    #[test]
    fn pow_over_factorial_small_cases() {
        assert_eq!(pow_over_factorial(3.0_f64, 0), 1.0);
        assert!((pow_over_factorial(2.0_f64, 3) - 8.0 / 6.0).abs() < 1e-15);
        assert_eq!(pow_over_factorial(0.0_f64, 4), 0.0);
    }

    #[test]
    fn precision_parses() {
        assert_eq!("native".parse::<Precision>(), Ok(Precision::Native));
        assert_eq!("Extended".parse::<Precision>(), Ok(Precision::Extended));
        assert!("quad".parse::<Precision>().is_err());
    }
}
