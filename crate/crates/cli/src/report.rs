//! One experiment evaluated into `(metric, cell)` pairs.

use ssct::baselines::{ed_error_probs_model, ed_min_samples, EnergyDetectorConfig};
use ssct::grid::GridSpec;
use ssct::montecarlo::{derive_seed, estimate, Hypothesis, SimOutcome, SimSpec};
use ssct::performance::{efficiency, evaluate_h0, grid_h1_estimated, EvalOptions, H1Side};
use ssct::tables::{mixed_cell, Cell};
use ssct::Result;

use crate::config::Experiment;

pub type Metrics = Vec<(String, Cell)>;

fn simulate(x: &Experiment, h: Hypothesis, tag: u64) -> Result<SimOutcome> {
    estimate(&SimSpec {
        trials: x.trials,
        seed: derive_seed(x.seed, tag),
        hypothesis: h,
        model: x.model.clone(),
        cfg: x.cfg,
    })
}

/// Runs whatever the experiment switches on.
///
/// The exact H0 side falls back to simulation only when simulation is
/// enabled; otherwise an uncertified recursion is reported as an error.
pub fn evaluate(x: &Experiment) -> Result<Metrics> {
    let cfg = &x.cfg;
    let p0 = x.priors.0;
    let mut out: Metrics = Vec::new();
    let mut put = |name: &str, c: Cell| out.push((name.to_string(), c));

    put("a_bar", Cell::input(cfg.a_bar()));
    put("b_bar", Cell::input(cfg.b_bar()));
    put("gamma_bar", Cell::input(cfg.gamma_bar()));
    put("delta_bar", Cell::input(cfg.delta_bar()));
    put("m", Cell::input(cfg.m() as f64));

    let h0 = if x.exact {
        let opts = EvalOptions {
            precision: x.precision,
            fallback_trials: if x.montecarlo { x.trials } else { 0 },
            seed: derive_seed(x.seed, 0),
            ..EvalOptions::default()
        };
        let h0 = evaluate_h0(cfg, &x.model, &opts)?;
        put("alpha", h0.alpha.into());
        put("asn_h0", h0.asn.into());
        put("t_p_h0", h0.truncation.into());
        Some(h0)
    } else {
        None
    };
    let h1 = if x.use_grid {
        let spec = x.grid.unwrap_or_else(|| GridSpec::auto(cfg));
        let h1 = H1Side::from_grid(&grid_h1_estimated(cfg, &x.model, spec)?);
        put("beta", h1.beta.into());
        put("asn_h1", h1.asn.into());
        put("t_p_h1", h1.truncation.into());
        Some(h1)
    } else {
        None
    };
    let mut asn = None;
    if let (Some(h0), Some(h1)) = (h0, h1) {
        let a = mixed_cell(p0, h0.asn.into(), h1.asn.into());
        put("asn", a);
        put("t_p", mixed_cell(p0, h0.truncation.into(), h1.truncation.into()));
        asn = Some(a);
    }

    if x.montecarlo {
        let m0 = simulate(x, Hypothesis::H0, 0)?;
        let m1 = simulate(x, Hypothesis::H1, 1)?;
        put("alpha_montecarlo", Cell::mc(m0.error));
        put("asn_h0_montecarlo", Cell::mc(m0.asn));
        put("t_p_h0_montecarlo", Cell::mc(m0.truncation));
        put("beta_montecarlo", Cell::mc(m1.error));
        put("asn_h1_montecarlo", Cell::mc(m1.asn));
        put("t_p_h1_montecarlo", Cell::mc(m1.truncation));
        let a = mixed_cell(p0, Cell::mc(m0.asn), Cell::mc(m1.asn));
        put("asn_montecarlo", a);
        put("t_p_montecarlo", mixed_cell(p0, Cell::mc(m0.truncation), Cell::mc(m1.truncation)));
        asn = asn.or(Some(a));
    }

    if let Some((alpha, beta)) = x.targets {
        let m_ed = match x.m_ed {
            Some(m) => Cell::input(m as f64),
            None => Cell::closed(ed_min_samples(x.snr_m, alpha, beta)? as f64),
        };
        let n = m_ed.value as usize;
        let ed = EnergyDetectorConfig::design(n, alpha, x.snr_m)?;
        let (a_ed, b_ed) = ed_error_probs_model(&ed, &x.model);
        put("m_ed", m_ed);
        put("alpha_ed", Cell::closed(a_ed));
        put("beta_ed", Cell::closed(b_ed));
        if let Some(a) = asn {
            put("efficiency", Cell::new(efficiency(a.value, n), a.tolerance / n as f64, a.method));
        }
    }
    Ok(out)
}
