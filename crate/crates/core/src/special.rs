//! Scalar special functions: Gaussian tail and its inverse, `ln I0`, and the
//! noncentral chi-square law with two degrees of freedom.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use crate::error::{Result, SsctError};

/// A probability, checked to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(SsctError::Domain(format!("{value} is not a probability")))
        }
    }

    /// Clamps tiny excursions produced by rounding.
    pub fn saturating(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Standard normal tail `Q(x) = P(Z > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Acklam's rational approximation to the normal quantile.
const ACK_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACK_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACK_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACK_D: [f64; 4] =
    [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];

fn acklam_tail(q: f64) -> f64 {
    let c = &ACK_C;
    let d = &ACK_D;
    (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
}

/// Inverse of [`gaussian_q`] for `0 < p < 1`.
pub fn gaussian_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SsctError::Domain(format!("gaussian_q_inv needs 0 < p < 1, got {p}")));
    }
    const P_LOW: f64 = 0.02425;
    // x0 approximates the upper quantile directly in either tail so that
    // p close to 1 does not lose digits through 1 - p.
    let mut x = if p < P_LOW {
        -acklam_tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        acklam_tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = 0.5 - p;
        let r = q * q;
        let a = &ACK_A;
        let b = &ACK_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = gaussian_q(x) - p;
        let u = -e / phi(x);
        x -= u / (1.0 - 0.5 * x * u);
    }
    Ok(x)
}

/// `ln I0(x)` for `x >= 0`, by power series below 30 and the large-argument
/// expansion above.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(SsctError::Domain(format!("log_bessel_i0 needs x >= 0, got {x}")));
    }
    Ok(ln_i0_unchecked(x))
}

pub(crate) fn ln_i0_unchecked(x: f64) -> f64 {
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum.ln()
    } else {
        let inv = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0_f64;
        loop {
            let next = term * (2.0 * k - 1.0).powi(2) * inv / k;
            if next < 1e-17 * sum || next > term {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
    }
}

/// Density of a noncentral chi-square variable with two degrees of freedom.
pub fn noncentral_chisq2_pdf(v: f64, lambda: f64) -> f64 {
    if !(v >= 0.0) {
        return 0.0;
    }
    (-LN_2 - 0.5 * (v + lambda) + ln_i0_unchecked((lambda * v).sqrt())).exp()
}

/// `P(V <= x)` for `V` noncentral chi-square with two degrees of freedom and
/// noncentrality `lambda`, i.e. `1 - Q1(sqrt(lambda), sqrt(x))`.
///
/// Poisson mixture of central chi-squares; the mixture is cut where the
/// Poisson tail is far below `1e-14`.
pub fn noncentral_chisq2_cdf(x: f64, lambda: f64) -> f64 {
    if !(lambda >= 0.0) {
        return f64::NAN;
    }
    if !(x > 0.0) {
        return 0.0;
    }
    let y = 0.5 * x;
    let mu = 0.5 * lambda;
    if mu == 0.0 {
        return -(-y).exp_m1();
    }
    let k_max = (mu + 10.0 * mu.sqrt() + 20.0).ceil() as usize;
    let ln_y = y.ln();
    let ln_mu = mu.ln();
    // p holds P(k+1, y), the regularized lower gamma function
    let mut p = -(-y).exp_m1();
    let mut sum = 0.0;
    for k in 0..=k_max {
        let kf = k as f64;
        let w = (-mu + kf * ln_mu - libm::lgamma(kf + 1.0)).exp();
        sum += w * p;
        p -= (-y + (kf + 1.0) * ln_y - libm::lgamma(kf + 2.0)).exp();
        if p <= 0.0 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(gaussian_q(0.0), 0.5);
    }

    #[test]
    fn q_symmetry() {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            assert!((gaussian_q(x) + gaussian_q(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_inv_domain() {
        assert!(gaussian_q_inv(0.0).is_err());
        assert!(gaussian_q_inv(1.0).is_err());
        assert!(gaussian_q_inv(f64::NAN).is_err());
        assert_eq!(gaussian_q_inv(0.5).unwrap(), 0.0);
    }

    #[test]
    fn q_inv_deep_tails() {
        for &p in &[1e-300, 1e-12, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-12] {
            let x = gaussian_q_inv(p).unwrap();
            let back = gaussian_q(x);
            assert!(((back - p) / p.min(1.0 - p).max(1e-300)).abs() < 1e-9 || (back - p).abs() < 1e-15, "p = {p}");
        }
    }

    #[test]
    fn i0_branches_meet() {
        let below = ln_i0_unchecked(30.0);
        let above = ln_i0_unchecked(30.0 + 1e-12);
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn log_i0_rejects_negative() {
        assert!(log_bessel_i0(-1.0).is_err());
        assert_eq!(log_bessel_i0(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_central_case() {
        let x = 4.60517;
        assert!((noncentral_chisq2_cdf(x, 0.0) - (1.0 - (-x / 2.0).exp())).abs() < 1e-15);
    }

    #[test]
    fn cdf_large_noncentrality() {
        // mean of V is 2 + lambda, the median sits close to it
        let c = noncentral_chisq2_cdf(402.0, 400.0);
        assert!(c > 0.45 && c < 0.55, "{c}");
    }

    #[test]
    fn probability_newtype() {
        assert!(Probability::new(1.5).is_err());
        assert_eq!(Probability::saturating(-1e-18).value(), 0.0);
    }
}
