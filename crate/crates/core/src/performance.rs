//! Operating characteristics of a configured test.
//!
//! Under H0 the crossing probabilities are exact: with `t = ξ/2`
//!
//! ```text
//! P(E_N) = e^{-b'_N} I'^(N-1)          N < M   (upper crossing at N)
//! P(E_M) = J'^(M)_{γ̄'_M,∞}(1)                 (terminal rejection)
//! P(C_N) = J'^(N)_{a'_N,b'_N}(1)               (still running after N)
//! ```
//!
//! `α = Σ P(E_N)` and `E_H0(N_s) = 1 + Σ_{N<M} P(C_N)`. Under H1 the same
//! quantities come from the backward grid recursion in [`crate::grid`].

use std::fmt;

use rayon::prelude::*;

use crate::boundary::SsctConfig;
use crate::error::{Result, SsctError};
use crate::grid::{self, GridSpec};
use crate::integrals::ExactEngine;
use crate::montecarlo::{self, Hypothesis, SimSpec, MIN_TRIALS};
use crate::real::{CompensatedSum, DoubleDouble, Precision, Real};
use crate::signal::SignalModel;
use crate::special::Probability;

/// Probabilities must stay inside `[-LOW_SLACK, 1 + HIGH_SLACK]`.
const LOW_SLACK: f64 = 1e-12;
const HIGH_SLACK: f64 = 1e-9;
/// Per-term bound on the estimated absolute rounding error.
pub const CERTIFY_TOLERANCE: f64 = 1e-10;
/// Largest scaled upper boundary `b_N/2` the exponent range supports.
const MAX_SCALED_BOUNDARY: f64 = 600.0;

/// How a number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Grid,
    MonteCarlo,
    Closed,
    /// A design input, not a computed value.
    Input,
    /// Exact and grid values combined.
    Numerical,
}

impl Method {
    /// Tag of a quantity computed from two others.
    pub fn combine(self, other: Method) -> Method {
        match (self, other) {
            _ if self == other => self,
            (Method::MonteCarlo, _) | (_, Method::MonteCarlo) => Method::MonteCarlo,
            _ => Method::Numerical,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Grid => "grid",
            Method::MonteCarlo => "montecarlo",
            Method::Closed => "closed-form",
            Method::Input => "input",
            Method::Numerical => "numerical",
        })
    }
}

/// A value, its method, and an uncertainty: an error bound for exact and
/// grid values, one standard error for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tagged {
    pub value: f64,
    pub method: Method,
    pub uncertainty: f64,
}

impl Tagged {
    pub fn new(value: f64, method: Method, uncertainty: f64) -> Self {
        Tagged { value, method, uncertainty }
    }
}

/// Exact null-hypothesis results.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactH0 {
    pub alpha: f64,
    /// `P(E_N)` for `N = 1..=M`.
    pub rejection_at: Vec<f64>,
    /// `P(C_N)` for `N = 1..M`, empty when only `α` was requested.
    pub continuing: Vec<f64>,
    pub asn: Option<f64>,
    /// `P(C_{M-1})`, the truncation probability.
    pub truncation: Option<f64>,
    pub precision: Precision,
    /// Estimated absolute rounding error of `alpha`.
    pub error_estimate: f64,
}

fn unstable(certified: usize, failed_at: usize, detail: String) -> SsctError {
    SsctError::Unstable { certified, failed_at, detail }
}

fn check_term(n: usize, value: f64, est: f64, what: &str) -> std::result::Result<(), String> {
    if !value.is_finite() {
        return Err(format!("{what} is not finite"));
    }
    if value < -LOW_SLACK || value > 1.0 + HIGH_SLACK {
        return Err(format!("{what} = {value:e} outside [0, 1]"));
    }
    if est > CERTIFY_TOLERANCE {
        return Err(format!("{what} rounding error estimate {est:.2e} at N = {n}"));
    }
    Ok(())
}

fn exact_h0_with<R: Real>(cfg: &SsctConfig, with_asn: bool, precision: Precision) -> Result<ExactH0> {
    let seq = cfg.boundaries();
    let m = cfg.m();
    let too_big = (1..=m).find(|&n| 0.5 * seq.upper(n) > MAX_SCALED_BOUNDARY);
    if let Some(n) = too_big {
        return Err(unstable(n - 1, n, format!("b_N/2 = {:.1} exceeds the exponent range", 0.5 * seq.upper(n))));
    }
    let engine = ExactEngine::<R>::new(&seq, m, 0.5)?;
    let safety = |n: usize| (8 + n) as f64 * R::EPSILON;

    // rejections before truncation, and the volumes behind them
    let mut rejection_at = Vec::with_capacity(m);
    let mut err_total = 0.0;
    for n in 1..m {
        let vol = engine.volume_tracked(n - 1);
        if !vol.value.is_finite() || vol.value.to_f64() < -LOW_SLACK * vol.magnitude.max(1.0) {
            return Err(unstable(n - 1, n, format!("volume I^({}) = {:?} is invalid", n - 1, vol.value)));
        }
        let w = (-engine.upper(n)).exp();
        let p = (w * vol.value).to_f64();
        let est = w.to_f64() * vol.magnitude * safety(n);
        check_term(n, p, est, "P(E_N)").map_err(|d| unstable(n - 1, n, d))?;
        err_total += est;
        rejection_at.push(p);
    }

    let continuing: Vec<(f64, f64)> = if with_asn {
        (1..m)
            .into_par_iter()
            .map(|n| {
                let t = engine.j_band_tracked(n, R::one());
                (t.value.to_f64(), t.magnitude * safety(n))
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut prev = 1.0;
    for (i, &(p, est)) in continuing.iter().enumerate() {
        let n = i + 1;
        check_term(n, p, est, "P(C_N)").map_err(|d| unstable(n - 1, n, d))?;
        if p > prev + HIGH_SLACK {
            return Err(unstable(n - 1, n, format!("P(C_N) increased from {prev:e} to {p:e}")));
        }
        prev = p;
    }

    let c = R::from_f64(cfg.gamma_bar()) + R::from_usize(m) * R::from_f64(cfg.delta_bar());
    let last = engine.j_upper_tracked(m, c.mul_f64(0.5), seq.index_s_terminal(m), R::one());
    let p_last = last.value.to_f64();
    let est_last = last.magnitude * safety(m);
    check_term(m, p_last, est_last, "P(E_M)").map_err(|d| unstable(m - 1, m, d))?;
    err_total += est_last;
    rejection_at.push(p_last);

    let alpha: CompensatedSum<f64> = rejection_at.iter().copied().collect();
    let alpha = alpha.value();
    if !(-LOW_SLACK..=1.0 + HIGH_SLACK).contains(&alpha) {
        return Err(unstable(m - 1, m, format!("α = {alpha:e} outside [0, 1]")));
    }
    let (asn, truncation) = if with_asn {
        let s: CompensatedSum<f64> = continuing.iter().map(|c| c.0).collect();
        (Some(1.0 + s.value()), continuing.last().map(|c| c.0))
    } else {
        (None, None)
    };
    Ok(ExactH0 {
        alpha: alpha.clamp(0.0, 1.0),
        rejection_at,
        continuing: continuing.into_iter().map(|c| c.0).collect(),
        asn,
        truncation,
        precision,
        error_estimate: err_total,
    })
}

/// Exact `α`, `E_H0(N_s)` and `P_H0(C_{M-1})` in the chosen precision.
pub fn exact_h0(cfg: &SsctConfig, precision: Precision) -> Result<ExactH0> {
    match precision {
        Precision::Native => exact_h0_with::<f64>(cfg, true, precision),
        Precision::Extended => exact_h0_with::<DoubleDouble>(cfg, true, precision),
    }
}

/// Exact `α` only (skips the band integrals).
pub fn exact_alpha(cfg: &SsctConfig, precision: Precision) -> Result<ExactH0> {
    match precision {
        Precision::Native => exact_h0_with::<f64>(cfg, false, precision),
        Precision::Extended => exact_h0_with::<DoubleDouble>(cfg, false, precision),
    }
}

/// False-alarm probability from the exact recursion, native precision.
pub fn false_alarm_exact(cfg: &SsctConfig) -> Result<Probability> {
    Ok(Probability::saturating(exact_alpha(cfg, Precision::Native)?.alpha))
}

/// Signal-hypothesis results from one grid sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridH1 {
    pub beta: f64,
    /// `P_H1(C_N)` for `N = 1..M`.
    pub continuing: Vec<f64>,
    pub asn: f64,
    pub truncation: f64,
    pub grid: GridSpec,
    /// `|β(n) - β(2n-1)|` when a refinement check was run.
    pub refinement_drift: Option<f64>,
    /// Estimated discretization errors of `β` and `asn`.
    pub beta_error: Option<f64>,
    pub asn_error: Option<f64>,
}

fn grid_h1_once(cfg: &SsctConfig, model: &SignalModel, spec: GridSpec) -> Result<GridH1> {
    let m = cfg.m();
    let s = grid::sweep(cfg, model, spec, &[cfg.gamma_bar(), cfg.b_bar(), cfg.a_bar()], m)?;
    grid::check_monotone(&s)?;
    let beta = s.at_zero[m - 1][0].clamp(0.0, 1.0);
    let mut continuing = Vec::with_capacity(m - 1);
    for k in 0..m - 1 {
        let row = &s.at_zero[k];
        let p = row[1] - row[2];
        if p < -1e-9 {
            return Err(SsctError::Contract(format!("G_N(0, b̄) < G_N(0, ā) at N = {}", k + 1)));
        }
        continuing.push(p.clamp(0.0, 1.0));
    }
    let asn = 1.0 + continuing.iter().sum::<f64>();
    let truncation = *continuing.last().unwrap_or(&0.0);
    Ok(GridH1 {
        beta,
        continuing,
        asn,
        truncation,
        grid: spec,
        refinement_drift: None,
        beta_error: None,
        asn_error: None,
    })
}

/// `β`, `E_H1(N_s)` and `P_H1(C_{M-1})` by backward recursion. With
/// `refine_tolerance`, the sweep is repeated on `2n - 1` points and the
/// finer result is returned if `β` moved less than the tolerance.
pub fn grid_h1(cfg: &SsctConfig, model: &SignalModel, spec: GridSpec, refine_tolerance: Option<f64>) -> Result<GridH1> {
    let coarse = grid_h1_once(cfg, model, spec)?;
    let Some(tol) = refine_tolerance else {
        return Ok(coarse);
    };
    let fine_spec = spec.refined();
    let mut fine = grid_h1_once(cfg, model, fine_spec)?;
    let drift = (fine.beta - coarse.beta).abs();
    if drift > tol {
        return Err(SsctError::GridRefinement {
            points: spec.points(),
            refined: fine_spec.points(),
            drift,
            tolerance: tol,
        });
    }
    fine.refinement_drift = Some(drift);
    Ok(fine)
}

/// [`grid_h1`] plus error estimates from a run on about half the points.
/// The linear interpolant converges as `h²`, which turns the difference into
/// an error estimate for the finer run.
pub fn grid_h1_estimated(cfg: &SsctConfig, model: &SignalModel, spec: GridSpec) -> Result<GridH1> {
    let mut fine = grid_h1_once(cfg, model, spec)?;
    if let Some(c) = spec.coarsened() {
        let coarse = grid_h1_once(cfg, model, c)?;
        // spacing ratio r gives error ≈ difference / (r² - 1)
        let r = (spec.points() - 1) as f64 / (c.points() - 1) as f64;
        let factor = match spec.quadrature() {
            grid::Quadrature::Trapezoid => 1.0 / (r * r - 1.0),
            grid::Quadrature::Simpson => 1.0,
        };
        fine.beta_error = Some(factor * (fine.beta - coarse.beta).abs());
        fine.asn_error = Some(factor * (fine.asn - coarse.asn).abs());
    }
    Ok(fine)
}

/// Density of one H1 increment `u = v - Δ̄`.
pub fn h1_increment_pdf(u: f64, model: &SignalModel, cfg: &SsctConfig) -> f64 {
    model.increment_pdf(u, cfg.delta_bar())
}

/// `η = 1 - ASN / M_ed`.
pub fn efficiency(asn: f64, m_ed_min: usize) -> f64 {
    1.0 - asn / m_ed_min as f64
}

/// Everything reported for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub m: usize,
    pub alpha: Tagged,
    pub beta: Tagged,
    pub asn_h0: Tagged,
    pub asn_h1: Tagged,
    pub asn_mixed: Tagged,
    pub t_p_h0: Tagged,
    pub t_p_h1: Tagged,
    pub t_p_mixed: Tagged,
    pub priors: (f64, f64),
    /// Energy-detection reference size and the resulting efficiency.
    pub efficiency: Option<(usize, f64)>,
}

/// Null-hypothesis side of a report, however it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H0Side {
    pub alpha: Tagged,
    pub asn: Tagged,
    pub truncation: Tagged,
}

/// Signal-hypothesis side of a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H1Side {
    pub beta: Tagged,
    pub asn: Tagged,
    pub truncation: Tagged,
}

impl H0Side {
    pub fn from_exact(e: &ExactH0) -> Self {
        H0Side {
            alpha: Tagged::new(e.alpha, Method::Exact, e.error_estimate),
            asn: Tagged::new(e.asn.unwrap_or(f64::NAN), Method::Exact, e.error_estimate),
            truncation: Tagged::new(e.truncation.unwrap_or(f64::NAN), Method::Exact, e.error_estimate),
        }
    }
}

impl H1Side {
    pub fn from_grid(g: &GridH1) -> Self {
        let beta_tol = g.beta_error.or(g.refinement_drift).unwrap_or(f64::NAN);
        let asn_tol = g.asn_error.unwrap_or(f64::NAN);
        H1Side {
            beta: Tagged::new(g.beta, Method::Grid, beta_tol),
            asn: Tagged::new(g.asn, Method::Grid, asn_tol),
            truncation: Tagged::new(g.truncation, Method::Grid, beta_tol),
        }
    }
}

fn mix(p0: f64, a: Tagged, b: Tagged) -> Tagged {
    let method = a.method.combine(b.method);
    let unc = if a.uncertainty.is_nan() || b.uncertainty.is_nan() {
        f64::NAN
    } else {
        (p0 * p0 * a.uncertainty * a.uncertainty + (1.0 - p0) * (1.0 - p0) * b.uncertainty * b.uncertainty).sqrt()
    };
    Tagged::new(p0 * a.value + (1.0 - p0) * b.value, method, unc)
}

impl PerformanceReport {
    /// Combines both sides under priors `(P(H0), P(H1))`.
    pub fn combine(m: usize, h0: H0Side, h1: H1Side, priors: (f64, f64), m_ed: Option<usize>) -> Result<Self> {
        check_priors(priors)?;
        let asn_mixed = mix(priors.0, h0.asn, h1.asn);
        let t_p_mixed = mix(priors.0, h0.truncation, h1.truncation);
        Ok(PerformanceReport {
            m,
            alpha: h0.alpha,
            beta: h1.beta,
            asn_h0: h0.asn,
            asn_h1: h1.asn,
            asn_mixed,
            t_p_h0: h0.truncation,
            t_p_h1: h1.truncation,
            t_p_mixed,
            priors,
            efficiency: m_ed.map(|r| (r, efficiency(asn_mixed.value, r))),
        })
    }
}

pub(crate) fn check_priors(priors: (f64, f64)) -> Result<()> {
    let (p0, p1) = priors;
    if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) || (p0 + p1 - 1.0).abs() > 1e-12 {
        return Err(SsctError::Domain(format!("priors ({p0}, {p1}) must be probabilities summing to 1")));
    }
    Ok(())
}

/// Exact H0 side plus grid H1 side, mixed under `priors`.
pub fn asn(cfg: &SsctConfig, model: &SignalModel, grid: GridSpec, priors: (f64, f64)) -> Result<PerformanceReport> {
    check_priors(priors)?;
    let h0 = exact_h0(cfg, Precision::Native)?;
    let h1 = grid_h1_estimated(cfg, model, grid)?;
    PerformanceReport::combine(cfg.m(), H0Side::from_exact(&h0), H1Side::from_grid(&h1), priors, None)
}

/// Whether the exact recursion fits the exponent range at this `M`.
pub fn exact_feasible(cfg: &SsctConfig) -> bool {
    0.5 * cfg.boundaries().upper(cfg.m()) <= MAX_SCALED_BOUNDARY
}

/// Knobs for [`evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Precision tried first; native escalates to extended on failure.
    pub precision: Precision,
    /// `None` picks [`GridSpec::auto`].
    pub grid: Option<GridSpec>,
    pub refine_tolerance: Option<f64>,
    pub priors: (f64, f64),
    /// Trials for the H0 fallback; below the minimum there is no fallback.
    pub fallback_trials: u64,
    pub seed: u64,
    /// Energy-detection sample size for the efficiency.
    pub m_ed: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            precision: Precision::Native,
            grid: None,
            refine_tolerance: None,
            priors: (0.5, 0.5),
            fallback_trials: 1_000_000,
            seed: 1,
            m_ed: None,
        }
    }
}

/// Null-hypothesis side by the exact recursion, falling back to simulation
/// when no precision certifies it.
pub fn evaluate_h0(cfg: &SsctConfig, model: &SignalModel, opts: &EvalOptions) -> Result<H0Side> {
    let mut result = exact_h0(cfg, opts.precision);
    if opts.precision == Precision::Native && exact_feasible(cfg) && matches!(result, Err(SsctError::Unstable { .. })) {
        result = exact_h0(cfg, Precision::Extended);
    }
    match result {
        Ok(e) => Ok(H0Side::from_exact(&e)),
        Err(SsctError::Unstable { .. }) if opts.fallback_trials >= MIN_TRIALS => {
            let spec = SimSpec {
                trials: opts.fallback_trials,
                seed: opts.seed,
                hypothesis: Hypothesis::H0,
                model: model.clone(),
                cfg: *cfg,
            };
            let o = montecarlo::estimate(&spec)?;
            Ok(H0Side {
                alpha: Tagged::new(o.error.point, Method::MonteCarlo, o.error.std_err),
                asn: Tagged::new(o.asn.point, Method::MonteCarlo, o.asn.std_err),
                truncation: Tagged::new(o.truncation.point, Method::MonteCarlo, o.truncation.std_err),
            })
        }
        Err(e) => Err(e),
    }
}

/// Full report: exact (or simulated) H0 side and grid H1 side.
pub fn evaluate(cfg: &SsctConfig, model: &SignalModel, opts: &EvalOptions) -> Result<PerformanceReport> {
    check_priors(opts.priors)?;
    let h0 = evaluate_h0(cfg, model, opts)?;
    let spec = opts.grid.unwrap_or_else(|| GridSpec::auto(cfg));
    let h1 = match opts.refine_tolerance {
        Some(_) => grid_h1(cfg, model, spec, opts.refine_tolerance)?,
        None => grid_h1_estimated(cfg, model, spec)?,
    };
    PerformanceReport::combine(cfg.m(), h0, H1Side::from_grid(&h1), opts.priors, opts.m_ed)
}
