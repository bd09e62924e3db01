//! Published design points.

use crate::boundary::SsctConfig;
use crate::error::Result;
use crate::signal::db_to_linear;

/// One column of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub snr_m_db: f64,
    /// Operating SNR of the primary signal.
    pub snr_o_db: f64,
    pub cfg: SsctConfig,
    /// Energy-detection sample size used as the efficiency reference.
    pub m_ed: usize,
    /// Energy-detection design targets `(ᾱ, β̄)`.
    pub ed_targets: (f64, f64),
}

/// `(SNR_m dB, γ̄, b̄, M, ED target)` of the four reference designs.
/// The shift follows the design rule `Δ̄ = 2 + SNR_m` unrounded.
const DESIGNS: [(f64, f64, f64, usize, f64); 4] = [
    (0.0, -8.5, 27.0, 40, 0.01),
    (-5.0, -5.69, 35.32, 140, 0.05),
    (-10.0, -4.0, 69.30, 730, 0.10),
    (-15.0, -1.897, 158.47, 4450, 0.15),
];

fn design(i: usize, snr_o_db: f64) -> Result<Scenario> {
    let (db, gamma, b, m, target) = DESIGNS[i];
    let cfg = SsctConfig::symmetric(b, gamma, m, db_to_linear(db))?;
    Ok(Scenario { label: format!("{db} dB"), snr_m_db: db, snr_o_db, cfg, m_ed: m, ed_targets: (target, target) })
}

/// The four symmetric designs at `SNR_m` = 0, -5, -10 and -15 dB.
pub fn snr_designs() -> Result<Vec<Scenario>> {
    (0..DESIGNS.len()).map(|i| design(i, DESIGNS[i].0)).collect()
}

/// The -15 dB design operated at `SNR_o` = -12, -13, -14 and -15 dB.
pub fn mismatch_designs() -> Result<Vec<Scenario>> {
    [-12.0, -13.0, -14.0, -15.0]
        .iter()
        .map(|&o| {
            let mut s = design(3, o)?;
            s.label = format!("{o} dB");
            Ok(s)
        })
        .collect()
}

/// `(M, ā, b̄, γ̄)` of the truncation-size study at -5 dB.
pub const TRUNCATION_STUDY: [(usize, f64, f64, f64); 6] = [
    (140, -35.32, 35.32, -5.69),
    (160, -28.95, 23.16, -5.50),
    (180, -27.33, 21.54, -6.00),
    (200, -26.40, 20.85, -6.32),
    (500, -25.48, 19.69, -6.32),
    (1000, -25.42, 19.63, -6.32),
];

/// Truncation-size study configs, `Δ̄ = 2 + SNR_m`.
pub fn truncation_designs() -> Result<Vec<Scenario>> {
    let snr = db_to_linear(-5.0);
    TRUNCATION_STUDY
        .iter()
        .map(|&(m, a, b, g)| {
            Ok(Scenario {
                label: format!("M={m}"),
                snr_m_db: -5.0,
                snr_o_db: -5.0,
                cfg: SsctConfig::new(a, b, g, 2.0 + snr, m, snr, 1.0)?,
                m_ed: 140,
                ed_targets: (0.05, 0.05),
            })
        })
        .collect()
}
