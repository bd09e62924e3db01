//! Detector configuration and the slanted boundaries of the transformed test.
//!
//! In normalized units (`x̄ = 2x/σ²`) the cumulative energy `ξ_N` continues
//! while `a_N < ξ_N < b_N` with
//!
//! * `a_i = 0` for `i <= P` and `a_i = ā + iΔ̄` afterwards,
//! * `b_i = b̄ + iΔ̄`,
//! * terminal threshold `γ̄_M = γ̄ + MΔ̄`.
//!
//! The integer parameters `P`, `Q` and `s(c)` are computed from exact
//! rationals of the stored `f64` fields, so ties such as `a_Q = b_1` land on
//! the same branch on every platform.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Result, SsctError};

/// Design parameters of a truncated SSCT, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsctConfig {
    a_bar: f64,
    b_bar: f64,
    gamma_bar: f64,
    delta_bar: f64,
    m: usize,
    snr_m: f64,
    noise_power: f64,
}

impl SsctConfig {
    /// Validates and stores a normalized configuration.
    pub fn new(
        a_bar: f64,
        b_bar: f64,
        gamma_bar: f64,
        delta_bar: f64,
        m: usize,
        snr_m: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let cfg = SsctConfig { a_bar, b_bar, gamma_bar, delta_bar, m, snr_m, noise_power };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds from thresholds in energy units; `x̄ = 2x/σ²`.
    pub fn from_raw(a: f64, b: f64, gamma: f64, delta: f64, m: usize, snr_m: f64, noise_power: f64) -> Result<Self> {
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(SsctError::InvalidConfig(format!("noise power must be positive, got {noise_power}")));
        }
        let k = 2.0 / noise_power;
        Self::new(a * k, b * k, gamma * k, delta * k, m, snr_m, noise_power)
    }

    /// The usual design: `ā = -b̄`, `Δ̄ = 2 + SNR_m`, unit noise power.
    pub fn symmetric(b_bar: f64, gamma_bar: f64, m: usize, snr_m: f64) -> Result<Self> {
        Self::new(-b_bar, b_bar, gamma_bar, 2.0 + snr_m, m, snr_m, 1.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SsctError::InvalidConfig(msg));
        let fields = [self.a_bar, self.b_bar, self.gamma_bar, self.delta_bar, self.snr_m, self.noise_power];
        if fields.iter().any(|x| !x.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if !(self.a_bar < 0.0 && self.b_bar > 0.0) {
            return bad(format!("need a < 0 < b, got ā = {}, b̄ = {}", self.a_bar, self.b_bar));
        }
        if !(self.a_bar < self.gamma_bar && self.gamma_bar < self.b_bar) {
            return bad(format!(
                "terminal threshold must satisfy a < γ < b, got γ̄ = {} outside ({}, {})",
                self.gamma_bar, self.a_bar, self.b_bar
            ));
        }
        if !(self.snr_m > 0.0) {
            return bad(format!("SNR_m must be positive, got {}", self.snr_m));
        }
        if !(self.noise_power > 0.0) {
            return bad(format!("noise power must be positive, got {}", self.noise_power));
        }
        let upper = 2.0 * (1.0 + self.snr_m);
        if !(self.delta_bar > 2.0 && self.delta_bar < upper) {
            return bad(format!("Δ̄ = {} must lie in (2, {upper}), i.e. σ_w² < Δ < σ_w²(1 + SNR_m)", self.delta_bar));
        }
        if self.m < 2 {
            return bad(format!("truncation size M must be at least 2, got {}", self.m));
        }
        let seq = BoundarySequences::new(self);
        if seq.gamma_bar_m() < seq.lower(self.m) {
            return bad(format!("γ̄_M = {} lies below a_M = {}", seq.gamma_bar_m(), seq.lower(self.m)));
        }
        Ok(())
    }

    pub fn a_bar(&self) -> f64 {
        self.a_bar
    }
    pub fn b_bar(&self) -> f64 {
        self.b_bar
    }
    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }
    pub fn delta_bar(&self) -> f64 {
        self.delta_bar
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn snr_m(&self) -> f64 {
        self.snr_m
    }
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// Lower threshold `a` in energy units.
    pub fn a(&self) -> f64 {
        self.a_bar * self.noise_power / 2.0
    }
    /// Upper threshold `b` in energy units.
    pub fn b(&self) -> f64 {
        self.b_bar * self.noise_power / 2.0
    }
    /// Terminal threshold `γ` in energy units.
    pub fn gamma(&self) -> f64 {
        self.gamma_bar * self.noise_power / 2.0
    }
    /// Per-sample shift `Δ` in energy units.
    pub fn delta(&self) -> f64 {
        self.delta_bar * self.noise_power / 2.0
    }

    /// Same thresholds with another truncation size.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.a_bar, self.b_bar, self.gamma_bar, self.delta_bar, m, self.snr_m, self.noise_power)
    }

    /// Same shift and truncation with new thresholds.
    pub fn with_thresholds(&self, a_bar: f64, b_bar: f64, gamma_bar: f64) -> Result<Self> {
        Self::new(a_bar, b_bar, gamma_bar, self.delta_bar, self.m, self.snr_m, self.noise_power)
    }

    pub fn boundaries(&self) -> BoundarySequences {
        BoundarySequences::new(self)
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite by construction")
}

fn floor_to_i64(r: &BigRational) -> i64 {
    r.floor().to_integer().to_i64().expect("index fits in i64")
}

/// Which case of the lower-limit vector definition applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiBranch {
    /// `Q` copies of `b_{n+1}`, then `a_{Q+n+1}, ..., a_{N-1}, c`.
    Staircase,
    /// `N-n-1` copies of `b_{n+1}`, then `c`.
    FlatThenC,
    /// `N-n` copies of `b_{n+1}`.
    Flat,
}

/// Ordered lower integration limits of a nested integral.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiVector {
    entries: Vec<f64>,
    branch: PsiBranch,
}

impl PsiVector {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn branch(&self) -> PsiBranch {
        self.branch
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops the last `i` entries.
    pub fn truncate(&self, i: usize) -> PsiVector {
        let keep = self.entries.len().saturating_sub(i);
        PsiVector { entries: self.entries[..keep].to_vec(), branch: self.branch }
    }
}

/// Boundary sequences derived from a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySequences {
    cfg: SsctConfig,
    p: usize,
    q: usize,
    gamma_bar_m: f64,
}

impl BoundarySequences {
    pub fn new(cfg: &SsctConfig) -> Self {
        let a = exact(cfg.a_bar);
        let b = exact(cfg.b_bar);
        let d = exact(cfg.delta_bar);
        let p = floor_to_i64(&(-a.clone() / d.clone())).max(0) as usize;
        // a_Q <= b_1 < a_{Q+1}  <=>  Q = 1 + floor((b̄ - ā)/Δ̄)
        let q = 1 + floor_to_i64(&((b - a) / d)) as usize;
        BoundarySequences { cfg: *cfg, p, q, gamma_bar_m: cfg.gamma_bar + cfg.m as f64 * cfg.delta_bar }
    }

    pub fn config(&self) -> &SsctConfig {
        &self.cfg
    }

    /// Number of leading zero lower bounds.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Largest index with `a_Q <= b_1`.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.cfg.m
    }

    pub fn gamma_bar_m(&self) -> f64 {
        self.gamma_bar_m
    }

    /// `γ̄_N = γ̄ + NΔ̄`.
    pub fn terminal(&self, n: usize) -> f64 {
        self.cfg.gamma_bar + n as f64 * self.cfg.delta_bar
    }

    /// `a_i`.
    pub fn lower(&self, i: usize) -> f64 {
        if i <= self.p {
            0.0
        } else {
            self.cfg.a_bar + i as f64 * self.cfg.delta_bar
        }
    }

    /// `b_i`.
    pub fn upper(&self, i: usize) -> f64 {
        self.cfg.b_bar + i as f64 * self.cfg.delta_bar
    }

    /// `s` with `b_s < c <= b_{s+1}`, or 0 when `c <= b_1`.
    pub fn index_s(&self, c: f64) -> Result<usize> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(SsctError::Domain(format!("index_s needs a positive finite c, got {c}")));
        }
        Ok(self.s_exact(&exact(c)))
    }

    /// `s` for `c = γ̄_N`, computed without rounding `γ̄ + NΔ̄`.
    pub fn index_s_terminal(&self, n: usize) -> usize {
        let c = exact(self.cfg.gamma_bar) + exact(self.cfg.delta_bar) * BigRational::from_integer(BigInt::from(n));
        self.s_exact(&c)
    }

    /// `s` for `c = a_N`: `N - Q` once `a_N > b_1`, else 0.
    pub fn index_s_lower(&self, n: usize) -> usize {
        n.saturating_sub(self.q)
    }

    fn s_exact(&self, c: &BigRational) -> usize {
        let t = (c - exact(self.cfg.b_bar)) / exact(self.cfg.delta_bar);
        if t <= BigRational::from_integer(BigInt::from(1)) {
            return 0;
        }
        let ceil = -floor_to_i64(&(-t));
        (ceil - 1).max(0) as usize
    }

    fn s_for(&self, c: f64) -> usize {
        if c <= 0.0 {
            0
        } else {
            self.s_exact(&exact(c))
        }
    }

    /// Lower-limit vector `ψ^N_{n,c}`.
    pub fn psi(&self, n: usize, c: f64, big_n: usize) -> Result<PsiVector> {
        if big_n < 2 || n + 2 > big_n {
            return Err(SsctError::Contract(format!("psi needs N >= 2 and n <= N-2, got n = {n}, N = {big_n}")));
        }
        let lo = self.lower(big_n - 1);
        let hi = self.upper(big_n);
        if !(c >= lo && c <= hi) {
            return Err(SsctError::Contract(format!("psi needs a_(N-1) = {lo} <= c <= b_N = {hi}, got {c}")));
        }
        let s = self.s_for(c);
        let b = self.upper(n + 1);
        let (entries, branch) = if n >= s {
            (vec![b; big_n - n], PsiBranch::Flat)
        } else if n + self.q + 2 <= big_n {
            let mut e = vec![b; self.q];
            e.extend((self.q + n + 1..big_n).map(|i| self.lower(i)));
            e.push(c);
            (e, PsiBranch::Staircase)
        } else {
            let mut e = vec![b; big_n - n - 1];
            e.push(c);
            (e, PsiBranch::FlatThenC)
        };
        Ok(PsiVector { entries, branch })
    }
}

/// `a_i` for a configuration.
pub fn lower_bound(i: usize, cfg: &SsctConfig) -> f64 {
    BoundarySequences::new(cfg).lower(i)
}

/// `b_i` for a configuration.
pub fn upper_bound(i: usize, cfg: &SsctConfig) -> f64 {
    BoundarySequences::new(cfg).upper(i)
}

/// `s(c)` for a configuration.
pub fn index_s(c: f64, cfg: &SsctConfig) -> Result<usize> {
    BoundarySequences::new(cfg).index_s(c)
}

/// `ψ^N_{n,c}` for a configuration.
pub fn psi_vector(n: usize, c: f64, big_n: usize, cfg: &SsctConfig) -> Result<PsiVector> {
    BoundarySequences::new(cfg).psi(n, c, big_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_db() -> SsctConfig {
        SsctConfig::symmetric(27.0, -8.5, 40, 1.0).unwrap()
    }

    #[test]
    fn exact_ties_at_zero_db() {
        let s = zero_db().boundaries();
        assert_eq!(s.p(), 9);
        assert_eq!(s.lower(9), 0.0);
        assert_eq!(s.lower(10), 3.0);
        assert_eq!(s.q(), 19);
        assert_eq!(s.lower(19), s.upper(1));
        assert!(s.lower(20) > s.upper(1));
    }

    #[test]
    fn s_for_lower_boundary_matches_closed_form() {
        let s = zero_db().boundaries();
        for n in 1..40 {
            let c = s.lower(n);
            if c > 0.0 {
                assert_eq!(s.index_s(c).unwrap(), s.index_s_lower(n), "N = {n}");
            }
        }
    }

    #[test]
    fn terminal_index_matches_float_path() {
        let s = zero_db().boundaries();
        let c = s.gamma_bar_m();
        assert_eq!(s.index_s(c).unwrap(), s.index_s_terminal(40));
    }

    #[test]
    fn rejects_degenerate_configs() {
        assert!(SsctConfig::symmetric(27.0, -8.5, 1, 1.0).is_err());
        assert!(SsctConfig::new(-27.0, 27.0, -8.5, 1.0, 40, 1.0, 1.0).is_err());
        assert!(SsctConfig::new(-27.0, 27.0, 30.0, 3.0, 40, 1.0, 1.0).is_err());
        assert!(SsctConfig::new(1.0, 27.0, 3.0, 3.0, 40, 1.0, 1.0).is_err());
        // γ̄_M = -20 + 2·3 < 0 = a_2
        assert!(SsctConfig::new(-27.0, 27.0, -20.0, 3.0, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn raw_constructor_normalizes() {
        let c = SsctConfig::from_raw(-13.5, 13.5, -4.25, 1.5, 40, 1.0, 1.0).unwrap();
        assert_eq!(c, zero_db());
        assert_eq!(c.b(), 13.5);
        assert_eq!(c.delta(), 1.5);
    }
}
