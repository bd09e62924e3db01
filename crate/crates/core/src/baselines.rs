//! Reference detectors: fixed-size energy detection and Wald's SPRT.
//!
//! The energy detector compares `2T/σ² = Σ v_i` over `M` samples with a
//! threshold `γ̄_ed`. Under H0 the statistic is chi-square with `2M` degrees
//! of freedom; under H1 it is noncentral with noncentrality `2M·SNR`. The
//! default error probabilities use the normal limits (mean `2M`, variance
//! `4M` under H0; mean `2M(1+SNR)`, variance `4M(1+2SNR)` under H1). The
//! `_exact` variants use the chi-square laws themselves.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::gamma_lr;

use crate::error::{Result, SsctError};
use crate::montecarlo::{run_trials, EnergyStream, Hypothesis, SimOutcome, MIN_TRIALS};
use crate::signal::SignalModel;
use crate::special::{gaussian_q, gaussian_q_inv, ln_i0_unchecked, log_bessel_i0};

fn check_target(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(SsctError::Domain(format!("{name} must lie in (0, 1), got {p}")))
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if snr > 0.0 && snr.is_finite() {
        Ok(())
    } else {
        Err(SsctError::Domain(format!("SNR must be positive, got {snr}")))
    }
}

/// Smallest `M` meeting both targets under the normal limits:
/// `⌈SNR⁻² (Q⁻¹(ᾱ) - Q⁻¹(1-β̄)·√(2SNR+1))²⌉`, at least 1.
///
/// ```
/// assert_eq!(ssct::baselines::ed_min_samples(1.0, 0.01, 0.01).unwrap(), 41);
/// ```
pub fn ed_min_samples(snr_m: f64, alpha_target: f64, beta_target: f64) -> Result<usize> {
    Ok((ed_min_samples_real(snr_m, alpha_target, beta_target)?.ceil() as usize).max(1))
}

/// The unrounded sample-size formula.
pub fn ed_min_samples_real(snr_m: f64, alpha_target: f64, beta_target: f64) -> Result<f64> {
    check_snr(snr_m)?;
    check_target("alpha target", alpha_target)?;
    check_target("beta target", beta_target)?;
    let d = gaussian_q_inv(alpha_target)? - gaussian_q_inv(1.0 - beta_target)? * (2.0 * snr_m + 1.0).sqrt();
    Ok(d * d / (snr_m * snr_m))
}

/// Fixed-size energy detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDetectorConfig {
    pub m: usize,
    /// `γ̄_ed` on the `2T/σ²` scale.
    pub threshold_normalized: f64,
    pub snr_m: f64,
}

/// Sample sizes below this make the normal limits questionable.
pub const CLT_MIN_SAMPLES: usize = 20;

impl EnergyDetectorConfig {
    /// Threshold `2M + 2√M·Q⁻¹(ᾱ)` meeting `ᾱ` under the normal limit.
    pub fn design(m: usize, alpha_target: f64, snr_m: f64) -> Result<Self> {
        check_target("alpha target", alpha_target)?;
        check_snr(snr_m)?;
        if m == 0 {
            return Err(SsctError::Domain("energy detector needs M >= 1".into()));
        }
        let mf = m as f64;
        let t = 2.0 * mf + 2.0 * mf.sqrt() * gaussian_q_inv(alpha_target)?;
        Ok(EnergyDetectorConfig { m, threshold_normalized: t, snr_m })
    }

    /// Threshold at the `1 - ᾱ` quantile of chi-square with `2M` degrees of
    /// freedom.
    pub fn design_exact(m: usize, alpha_target: f64, snr_m: f64) -> Result<Self> {
        check_target("alpha target", alpha_target)?;
        check_snr(snr_m)?;
        if m == 0 {
            return Err(SsctError::Domain("energy detector needs M >= 1".into()));
        }
        let chi = ChiSquared::new(2.0 * m as f64).map_err(|e| SsctError::Domain(e.to_string()))?;
        let t = chi.inverse_cdf(1.0 - alpha_target);
        Ok(EnergyDetectorConfig { m, threshold_normalized: t, snr_m })
    }
}

/// `(α, β)` under the normal limits at operating SNR `snr_o`.
pub fn ed_error_probs(cfg: &EnergyDetectorConfig, snr_o: f64) -> (f64, f64) {
    let m = cfg.m as f64;
    let t = cfg.threshold_normalized;
    let alpha = gaussian_q((t - 2.0 * m) / (4.0 * m).sqrt());
    let beta = 1.0 - gaussian_q((t - 2.0 * m * (1.0 + snr_o)) / (4.0 * m * (1.0 + 2.0 * snr_o)).sqrt());
    (alpha, beta)
}

/// `(α, β)` under the normal limits for any source model. One normalized
/// energy has mean `2 + E[λ]` and variance `4 + 4E[λ] + Var[λ]`; for a
/// constant modulus this is [`ed_error_probs`].
pub fn ed_error_probs_model(cfg: &EnergyDetectorConfig, model: &SignalModel) -> (f64, f64) {
    let m = cfg.m as f64;
    let t = cfg.threshold_normalized;
    let mean_l = model.mean_noncentrality();
    let var_l: f64 = model.components().iter().map(|&(l, w)| w * (l - mean_l) * (l - mean_l)).sum();
    let alpha = gaussian_q((t - 2.0 * m) / (4.0 * m).sqrt());
    let beta = 1.0 - gaussian_q((t - m * (2.0 + mean_l)) / (m * (4.0 + 4.0 * mean_l + var_l)).sqrt());
    (alpha, beta)
}

/// `P(X <= x)` for `X` noncentral chi-square with `dof` degrees of freedom.
pub fn noncentral_chisq_cdf(x: f64, dof: f64, lambda: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let mu = 0.5 * lambda;
    if mu == 0.0 {
        return gamma_lr(0.5 * dof, 0.5 * x);
    }
    let spread = 12.0 * mu.sqrt() + 30.0;
    let lo = (mu - spread).max(0.0).floor() as usize;
    let hi = (mu + spread).ceil() as usize;
    let ln_mu = mu.ln();
    (lo..=hi)
        .map(|j| {
            let jf = j as f64;
            let w = (-mu + jf * ln_mu - libm::lgamma(jf + 1.0)).exp();
            w * gamma_lr(0.5 * dof + jf, 0.5 * x)
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `(α, β)` from the chi-square laws themselves.
pub fn ed_error_probs_exact(cfg: &EnergyDetectorConfig, snr_o: f64) -> (f64, f64) {
    let m = cfg.m as f64;
    let t = cfg.threshold_normalized;
    let alpha = 1.0 - gamma_lr(m, 0.5 * t);
    let beta = noncentral_chisq_cdf(t, 2.0 * m, 2.0 * m * snr_o);
    (alpha, beta)
}

/// Log-likelihood ratio of one normalized energy `v` for a known
/// noncentrality: `-λ/2 + ln I0(√(λv))`.
pub fn sprt_increment(v: f64, lambda: f64) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(SsctError::Domain(format!("normalized energy must be finite and >= 0, got {v}")));
    }
    Ok(-0.5 * lambda + log_bessel_i0((lambda * v).sqrt())?)
}

/// Non-truncated SPRT on normalized energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtConfig {
    pub a_l: f64,
    pub b_l: f64,
    pub lambda: f64,
}

/// Default hard cap on the samples of one SPRT run.
pub const SPRT_SAMPLE_CAP: usize = 1_000_000;

impl SprtConfig {
    pub fn new(a_l: f64, b_l: f64, lambda: f64) -> Result<Self> {
        if !(a_l < 0.0 && b_l > 0.0 && a_l.is_finite() && b_l.is_finite()) {
            return Err(SsctError::InvalidConfig(format!("need a_L < 0 < b_L, got ({a_l}, {b_l})")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SsctError::InvalidConfig(format!("noncentrality must be positive, got {lambda}")));
        }
        Ok(SprtConfig { a_l, b_l, lambda })
    }

    /// Wald's thresholds `a_L = ln(β̄/(1-ᾱ))`, `b_L = ln((1-β̄)/ᾱ)`.
    pub fn wald(alpha_target: f64, beta_target: f64, lambda: f64) -> Result<Self> {
        check_target("alpha target", alpha_target)?;
        check_target("beta target", beta_target)?;
        if alpha_target + beta_target >= 1.0 {
            return Err(SsctError::Domain("need alpha + beta < 1".into()));
        }
        Self::new((beta_target / (1.0 - alpha_target)).ln(), ((1.0 - beta_target) / alpha_target).ln(), lambda)
    }
}

/// Whether the SPRT rejected H0, and after how many samples.
pub fn sprt_run<I>(cfg: &SprtConfig, normalized: I, cap: usize) -> Result<(bool, usize)>
where
    I: IntoIterator<Item = f64>,
{
    let mut l = 0.0;
    let mut n = 0;
    for v in normalized {
        if n == cap {
            return Err(SsctError::SampleCap(cap));
        }
        n += 1;
        l += sprt_increment(v, cfg.lambda)?;
        if l >= cfg.b_l {
            return Ok((true, n));
        }
        if l <= cfg.a_l {
            return Ok((false, n));
        }
    }
    Err(SsctError::StreamExhausted(n))
}

/// Monte Carlo error rate and ASN of the SPRT; `model` drives H1.
pub fn sprt_simulate(
    cfg: &SprtConfig,
    model: &SignalModel,
    hypothesis: Hypothesis,
    trials: u64,
    seed: u64,
) -> Result<SimOutcome> {
    if trials < MIN_TRIALS {
        return Err(SsctError::Contract(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let lambda = cfg.lambda;
    let tally = run_trials(trials, |k| {
        // unit noise power: v = 2|r|²
        let stream = EnergyStream::new(hypothesis, model, 1.0, seed, k);
        let mut l = 0.0;
        for (n, e) in stream.enumerate() {
            if n == SPRT_SAMPLE_CAP {
                return Err(SsctError::SampleCap(SPRT_SAMPLE_CAP));
            }
            l += -0.5 * lambda + ln_i0_unchecked((2.0 * lambda * e).sqrt());
            if l >= cfg.b_l || l <= cfg.a_l {
                let reject = l >= cfg.b_l;
                let error = match hypothesis {
                    Hypothesis::H0 => reject,
                    Hypothesis::H1 => !reject,
                };
                return Ok((error, n + 1, false));
            }
        }
        unreachable!("energy streams are unbounded")
    })?;
    Ok(tally.outcome())
}

/// Both sides of an SPRT evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtReport {
    pub config: SprtConfig,
    pub h0: SimOutcome,
    pub h1: SimOutcome,
}

impl SprtReport {
    pub fn mixed_asn(&self, p0: f64) -> f64 {
        p0 * self.h0.asn.point + (1.0 - p0) * self.h1.asn.point
    }
}

/// Wald thresholds whose simulated error rates match `(α*, β*)`.
///
/// Wald's design is conservative, so the nominal targets are adjusted by
/// the fixed-point step `ᾱ ← ᾱ·α*/α̂` (likewise for `β̄`). All iterations use
/// the same seed, which keeps the map smooth enough to settle.
pub fn sprt_calibrate(
    alpha: f64,
    beta: f64,
    model: &SignalModel,
    trials: u64,
    seed: u64,
    iterations: usize,
) -> Result<SprtReport> {
    let lambda = 2.0 * model.snr();
    let (mut ta, mut tb) = (alpha, beta);
    let mut last = None;
    for _ in 0..iterations.max(1) {
        let cfg = SprtConfig::wald(ta, tb, lambda)?;
        let h0 = sprt_simulate(&cfg, model, Hypothesis::H0, trials, seed)?;
        let h1 = sprt_simulate(&cfg, model, Hypothesis::H1, trials, seed ^ 0x5eed)?;
        last = Some(SprtReport { config: cfg, h0, h1 });
        let (ea, eb) = (h0.error.point, h1.error.point);
        if ea <= 0.0 || eb <= 0.0 {
            break;
        }
        ta = (ta * alpha / ea).clamp(1e-6, 0.45);
        tb = (tb * beta / eb).clamp(1e-6, 0.45);
    }
    Ok(last.expect("at least one iteration"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_size_formula() {
        assert!((ed_min_samples_real(1.0, 0.01, 0.01).unwrap() - 40.395).abs() < 1e-3);
        assert_eq!(ed_min_samples(1.0, 0.5, 0.5).unwrap(), 1);
        assert!(ed_min_samples(1.0, 0.0, 0.1).is_err());
        assert!(ed_min_samples(0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn centered_threshold_gives_half() {
        let cfg = EnergyDetectorConfig { m: 100, threshold_normalized: 200.0, snr_m: 1.0 };
        assert_eq!(ed_error_probs(&cfg, 1.0).0, 0.5);
    }

    #[test]
    fn clt_design_hits_its_target() {
        let cfg = EnergyDetectorConfig::design(140, 0.055, 0.316).unwrap();
        assert!((ed_error_probs(&cfg, 0.316).0 - 0.055).abs() < 1e-12);
    }

    #[test]
    fn exact_design_hits_its_target() {
        let cfg = EnergyDetectorConfig::design_exact(40, 0.011, 1.0).unwrap();
        assert!((ed_error_probs_exact(&cfg, 1.0).0 - 0.011).abs() < 1e-9);
    }

    #[test]
    fn model_form_matches_constant_modulus() {
        let cfg = EnergyDetectorConfig::design(140, 0.055, 0.316).unwrap();
        let a = ed_error_probs(&cfg, 0.316);
        let b = ed_error_probs_model(&cfg, &SignalModel::qpsk(0.316).unwrap());
        assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-14);
    }

    #[test]
    fn noncentral_reduces_to_two_dof_case() {
        for &(x, l) in &[(0.5, 2.0), (3.0, 2.0), (10.0, 6.0)] {
            let a = noncentral_chisq_cdf(x, 2.0, l);
            let b = crate::special::noncentral_chisq2_cdf(x, l);
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn increment_values() {
        assert_eq!(sprt_increment(3.0, 0.0).unwrap(), 0.0);
        assert_eq!(sprt_increment(0.0, 2.0).unwrap(), -1.0);
        assert!(sprt_increment(-1.0, 2.0).is_err());
    }

    #[test]
    fn wald_thresholds() {
        let c = SprtConfig::wald(0.05, 0.05, 1.0).unwrap();
        assert_eq!(c.a_l, (0.05f64 / 0.95).ln());
        assert_eq!(c.b_l, (0.95f64 / 0.05).ln());
    }

    #[test]
    fn zero_stream_accepts_by_drift() {
        let c = SprtConfig::wald(0.05, 0.05, 2.0).unwrap();
        let (reject, n) = sprt_run(&c, std::iter::repeat(0.0), SPRT_SAMPLE_CAP).unwrap();
        assert!(!reject);
        assert_eq!(n, (-c.a_l).ceil() as usize);
    }

    #[test]
    fn cap_is_an_error() {
        let c = SprtConfig::wald(0.05, 0.05, 2.0).unwrap();
        // the root of z(v) = 0 keeps L_N at zero forever
        let v = {
            let (mut lo, mut hi) = (0.0, 20.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sprt_increment(mid, 2.0).unwrap() < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        assert!(matches!(sprt_run(&c, std::iter::repeat(v), 1000), Err(SsctError::SampleCap(1000))));
    }
}
