//! Distribution of the normalized received energy under the signal
//! hypothesis.
//!
//! With `|h| = 1` and a symbol `s` the normalized energy `v = 2|s + w|²/σ²`
//! is noncentral chi-square with two degrees of freedom and noncentrality
//! `λ = 2|s|²/σ²`. A constellation with several symbol energies gives a
//! finite mixture over `λ`.

use crate::error::{Result, SsctError};
use crate::special::{ln_i0_unchecked, noncentral_chisq2_cdf};

/// Source alphabet, used by the simulator to draw actual symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    /// Constant modulus (QPSK points).
    Qpsk,
    /// Square 64-QAM with levels ±1, ±3, ±5, ±7 per rail.
    Qam64,
    /// Arbitrary mixture; symbols are placed on the real axis.
    Custom,
}

/// H1 energy model: mixture components `(λ_j, w_j)` and the SNR they encode.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    components: Vec<(f64, f64)>,
    snr: f64,
    modulation: Modulation,
}

/// Distinct `|s|²` values of square 64-QAM on the odd-integer lattice, with
/// their multiplicities out of 64.
const QAM64_ENERGIES: [(f64, f64); 9] = [
    (2.0, 4.0),
    (10.0, 8.0),
    (18.0, 4.0),
    (26.0, 8.0),
    (34.0, 8.0),
    (50.0, 12.0),
    (58.0, 8.0),
    (74.0, 8.0),
    (98.0, 4.0),
];

/// Average `|s|²` of the unscaled 64-QAM lattice.
pub const QAM64_MEAN_ENERGY: f64 = 42.0;

impl SignalModel {
    /// Every symbol has `|s|²/σ² = snr`, so `λ = 2·snr`.
    pub fn constant_modulus(snr: f64) -> Result<Self> {
        check_snr(snr)?;
        Ok(SignalModel { components: vec![(2.0 * snr, 1.0)], snr, modulation: Modulation::Qpsk })
    }

    pub fn qpsk(snr: f64) -> Result<Self> {
        Self::constant_modulus(snr)
    }

    /// Equiprobable square 64-QAM with average energy `snr·σ²`.
    pub fn qam64(snr: f64) -> Result<Self> {
        check_snr(snr)?;
        let components =
            QAM64_ENERGIES.iter().map(|&(e, mult)| (2.0 * snr * e / QAM64_MEAN_ENERGY, mult / 64.0)).collect();
        Ok(SignalModel { components, snr, modulation: Modulation::Qam64 })
    }

    /// Arbitrary mixture; weights must sum to one.
    pub fn mixture(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(SsctError::Domain("mixture needs at least one component".into()));
        }
        let mut total = 0.0;
        for &(lambda, w) in &components {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(SsctError::Domain(format!("noncentrality must be finite and >= 0, got {lambda}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(SsctError::Domain(format!("weight {w} is not a probability")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(SsctError::Domain(format!("weights sum to {total}, not 1")));
        }
        let snr = components.iter().map(|&(l, w)| 0.5 * l * w).sum();
        Ok(SignalModel { components, snr, modulation: Modulation::Custom })
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    /// Average per-sample SNR, `E|s|²/σ²`.
    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Mixture mean of `λ`, equal to `2·snr`.
    pub fn mean_noncentrality(&self) -> f64 {
        self.components.iter().map(|&(l, w)| l * w).sum()
    }

    /// Density of the normalized energy `v`.
    pub fn energy_pdf(&self, v: f64) -> f64 {
        if !(v >= 0.0) {
            return 0.0;
        }
        self.components
            .iter()
            .map(|&(l, w)| w * (-std::f64::consts::LN_2 - 0.5 * (v + l) + ln_i0_unchecked((l * v).sqrt())).exp())
            .sum()
    }

    /// CDF of the normalized energy `v`.
    pub fn energy_cdf(&self, v: f64) -> f64 {
        self.components.iter().map(|&(l, w)| w * noncentral_chisq2_cdf(v, l)).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Density of the increment `u = v - Δ̄`.
    pub fn increment_pdf(&self, u: f64, delta_bar: f64) -> f64 {
        self.energy_pdf(u + delta_bar)
    }

    /// CDF of the increment `u = v - Δ̄`.
    pub fn increment_cdf(&self, u: f64, delta_bar: f64) -> f64 {
        self.energy_cdf(u + delta_bar)
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if snr >= 0.0 && snr.is_finite() {
        Ok(())
    } else {
        Err(SsctError::Domain(format!("SNR must be finite and >= 0, got {snr}")))
    }
}

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
