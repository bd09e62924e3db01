//! Online truncated test.
//!
//! The statistic `Λ_N = Σ (|r_i|² - Δ)` is kept in energy units. For
//! `N < M` the test rejects once `Λ_N >= b`, accepts once `Λ_N <= a` and
//! otherwise takes another sample; at `N = M` it rejects iff `Λ_M >= γ`.
//!
//! ```
//! use ssct::boundary::SsctConfig;
//! use ssct::detector::{Decision, Detector};
//!
//! let cfg = SsctConfig::symmetric(27.0, -8.5, 40, 1.0).unwrap();
//! let mut det = Detector::new(cfg);
//! // b + Δ = 13.5 + 1.5 in energy units (σ² = 1)
//! let d = det.step(15.0).unwrap();
//! assert_eq!(d, Decision::RejectH0 { samples: 1, statistic: 13.5 });
//! ```

use crate::boundary::{BoundarySequences, SsctConfig};
use crate::error::{Result, SsctError};

/// Outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    RejectH0 { samples: usize, statistic: f64 },
    AcceptH0 { samples: usize, statistic: f64 },
    Continue,
}

impl Decision {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Decision::Continue)
    }

    pub fn rejects(&self) -> bool {
        matches!(self, Decision::RejectH0 { .. })
    }

    /// `N_s`, if the test has stopped.
    pub fn samples(&self) -> Option<usize> {
        match *self {
            Decision::RejectH0 { samples, .. } | Decision::AcceptH0 { samples, .. } => Some(samples),
            Decision::Continue => None,
        }
    }
}

fn check_energy(energy: f64) -> Result<()> {
    if energy >= 0.0 && energy.is_finite() {
        Ok(())
    } else {
        Err(SsctError::Domain(format!("energy must be finite and >= 0, got {energy}")))
    }
}

/// Raw-units detector state.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: SsctConfig,
    a: f64,
    b: f64,
    gamma: f64,
    delta: f64,
    n: usize,
    lambda: f64,
    terminated: bool,
}

impl Detector {
    /// The config is validated on construction, so any `SsctConfig` works.
    pub fn new(cfg: SsctConfig) -> Self {
        Detector {
            a: cfg.a(),
            b: cfg.b(),
            gamma: cfg.gamma(),
            delta: cfg.delta(),
            cfg,
            n: 0,
            lambda: 0.0,
            terminated: false,
        }
    }

    pub fn config(&self) -> &SsctConfig {
        &self.cfg
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    /// `Λ_N` in energy units.
    pub fn statistic(&self) -> f64 {
        self.lambda
    }

    /// `ξ_N = 2Λ_N/σ² + NΔ̄`, the normalized cumulative energy.
    pub fn normalized_energy(&self) -> f64 {
        2.0 * self.lambda / self.cfg.noise_power() + self.n as f64 * self.cfg.delta_bar()
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.lambda = 0.0;
        self.terminated = false;
    }

    /// Feeds one received energy `|r_i|²`.
    pub fn step(&mut self, energy: f64) -> Result<Decision> {
        if self.terminated {
            return Err(SsctError::Contract("detector already reached a decision".into()));
        }
        check_energy(energy)?;
        self.n += 1;
        self.lambda += energy - self.delta;
        let (n, l) = (self.n, self.lambda);
        let d = if n == self.cfg.m() {
            if l >= self.gamma {
                Decision::RejectH0 { samples: n, statistic: l }
            } else {
                Decision::AcceptH0 { samples: n, statistic: l }
            }
        } else if l >= self.b {
            Decision::RejectH0 { samples: n, statistic: l }
        } else if l <= self.a {
            Decision::AcceptH0 { samples: n, statistic: l }
        } else {
            Decision::Continue
        };
        self.terminated = d.is_terminal();
        Ok(d)
    }
}

/// Folds a stream through a fresh detector.
pub fn run_to_decision<I>(cfg: &SsctConfig, energies: I) -> Result<(Decision, usize)>
where
    I: IntoIterator<Item = f64>,
{
    let mut det = Detector::new(*cfg);
    for e in energies {
        let d = det.step(e)?;
        if let Some(n) = d.samples() {
            return Ok((d, n));
        }
    }
    Err(SsctError::StreamExhausted(det.samples()))
}

/// The same test on normalized energies `v_i = 2|r_i|²/σ²`, comparing
/// `ξ_N = Σ v_i` with the slanted bounds `a_N`, `b_N` and `γ̄_M`. The lower
/// comparison uses `ā + NΔ̄` unclamped; it differs from `a_N = 0` only when
/// `ξ_N = 0`, where the raw rule keeps sampling.
#[derive(Debug, Clone)]
pub struct TransformedDetector {
    seq: BoundarySequences,
    n: usize,
    xi: f64,
    terminated: bool,
}

impl TransformedDetector {
    pub fn new(cfg: SsctConfig) -> Self {
        TransformedDetector { seq: cfg.boundaries(), n: 0, xi: 0.0, terminated: false }
    }

    pub fn normalized_energy(&self) -> f64 {
        self.xi
    }

    /// Feeds one normalized energy; the returned statistic is `ξ_N`.
    pub fn step(&mut self, v: f64) -> Result<Decision> {
        if self.terminated {
            return Err(SsctError::Contract("detector already reached a decision".into()));
        }
        check_energy(v)?;
        self.n += 1;
        self.xi += v;
        let (n, xi) = (self.n, self.xi);
        let d = if n == self.seq.m() {
            if xi >= self.seq.gamma_bar_m() {
                Decision::RejectH0 { samples: n, statistic: xi }
            } else {
                Decision::AcceptH0 { samples: n, statistic: xi }
            }
        } else if xi >= self.seq.upper(n) {
            Decision::RejectH0 { samples: n, statistic: xi }
        } else if xi <= self.seq.config().a_bar() + n as f64 * self.seq.config().delta_bar() {
            Decision::AcceptH0 { samples: n, statistic: xi }
        } else {
            Decision::Continue
        };
        self.terminated = d.is_terminal();
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_db() -> SsctConfig {
        SsctConfig::symmetric(27.0, -8.5, 40, 1.0).unwrap()
    }

    #[test]
    fn zero_drift_path_uses_terminal_rule() {
        for (gamma, reject) in [(-8.5, true), (0.5, false)] {
            let cfg = SsctConfig::symmetric(27.0, gamma, 40, 1.0).unwrap();
            let (d, n) = run_to_decision(&cfg, std::iter::repeat(cfg.delta())).unwrap();
            assert_eq!(n, 40);
            assert_eq!(d.rejects(), reject);
        }
    }

    #[test]
    fn zero_energies_accept_after_ceil_a_over_delta() {
        let cfg = zero_db();
        let (d, n) = run_to_decision(&cfg, std::iter::repeat(0.0)).unwrap();
        // Λ_N = -1.5 N reaches a = -13.5 exactly at N = 9
        assert!(!d.rejects());
        assert_eq!(n, 9);
    }

    #[test]
    fn stepping_after_decision_is_an_error() {
        let mut det = Detector::new(zero_db());
        assert!(det.step(100.0).unwrap().rejects());
        assert!(det.step(1.0).is_err());
        det.reset();
        assert_eq!(det.step(1.0).unwrap(), Decision::Continue);
    }

    #[test]
    fn negative_energy_rejected() {
        assert!(Detector::new(zero_db()).step(-1.0).is_err());
        assert!(Detector::new(zero_db()).step(f64::NAN).is_err());
    }

    #[test]
    fn short_stream_is_exhausted() {
        let err = run_to_decision(&zero_db(), [1.5, 1.5]).unwrap_err();
        assert!(matches!(err, SsctError::StreamExhausted(2)));
    }
}
