//! Backward recursion for signal-hypothesis probabilities.
//!
//! `G_k(t)` is the probability, with `k` samples left and the normalized
//! statistic at `t`, of ending on the "low" side of a terminal threshold:
//!
//! ```text
//! G_k(t) = F(ā - t) + ∫_{ā}^{b̄} G_{k-1}(y) p(y - t) dy
//! G_1(t) = F(thr - t)
//! ```
//!
//! where `p` and `F` are the density and CDF of one increment `v - Δ̄`.
//! `G_{k-1}` is replaced by its piecewise linear (trapezoid) or piecewise
//! quadratic (Simpson) interpolant on a uniform grid over `[ā, b̄]`, and the
//! interpolant is integrated exactly against `p`, splitting each panel at the
//! jump of `p` at `-Δ̄`. On a uniform grid the weights depend only on the
//! node offset, so the whole operator costs `O(n)` kernel integrals to build.

use std::sync::OnceLock;

use crate::boundary::SsctConfig;
use crate::error::{Result, SsctError};
use crate::signal::SignalModel;

/// Interpolant used for `G_{k-1}` between grid nodes.
///
/// The linear interpolant of a nonincreasing function is nonincreasing, and
/// integrating it exactly keeps every `G_k` nonincreasing in `t`. The
/// quadratic one converges faster but overshoots near the kinks of `G_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    Trapezoid,
    Simpson,
}

impl Quadrature {
    /// Largest tolerated increase of `G_k` between neighbouring nodes.
    pub fn monotone_tolerance(self) -> f64 {
        match self {
            Quadrature::Trapezoid => MONOTONE_TOLERANCE,
            Quadrature::Simpson => 1e-3,
        }
    }
}

/// Grid resolution and rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    points: usize,
    quadrature: Quadrature,
}

impl GridSpec {
    /// `points` must be odd and at least 201.
    pub fn new(points: usize, quadrature: Quadrature) -> Result<Self> {
        if points < 201 || points % 2 == 0 {
            return Err(SsctError::Domain(format!("grid needs an odd number of points >= 201, got {points}")));
        }
        Ok(GridSpec { points, quadrature })
    }

    /// Spacing of about 0.1 normalized units, between 401 and 3201 points.
    pub fn auto(cfg: &SsctConfig) -> Self {
        let span = cfg.b_bar() - cfg.a_bar();
        let mut points = ((span / 0.1).ceil() as usize + 1).clamp(401, 3201);
        if points % 2 == 0 {
            points += 1;
        }
        GridSpec { points, quadrature: Quadrature::Trapezoid }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    /// About half the points (odd), or `None` below the minimum size.
    pub fn coarsened(&self) -> Option<Self> {
        GridSpec::new(self.points.div_ceil(2) | 1, self.quadrature).ok()
    }

    /// `2n - 1` points: every old node kept, one new node per interval.
    pub fn refined(&self) -> Self {
        GridSpec { points: 2 * self.points - 1, quadrature: self.quadrature }
    }
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(16))
}

/// Increment law of one sample under H1 for a given configuration.
struct Kernel<'a> {
    model: &'a SignalModel,
    delta_bar: f64,
}

impl Kernel<'_> {
    fn pdf(&self, u: f64) -> f64 {
        self.model.increment_pdf(u, self.delta_bar)
    }

    fn cdf(&self, u: f64) -> f64 {
        self.model.increment_cdf(u, self.delta_bar)
    }

    /// `h ∫_0^width L_r(x) p((offset + x) h) dx` for the `width + 1`
    /// Lagrange basis polynomials on nodes `0, 1, ..., width`.
    fn basis_integrals(&self, offset: f64, width: usize, h: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        // p vanishes left of x0 and jumps there
        let x0 = -self.delta_bar / h - offset;
        let lo = x0.max(0.0);
        let hi = width as f64;
        if lo >= hi {
            return out;
        }
        let (gx, gw) = gl16();
        // split long supports so each piece is at most one cell wide
        let pieces = (hi - lo).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for piece in 0..pieces {
            let a = lo + piece as f64 * step;
            let half = 0.5 * step;
            let mid = a + half;
            for (&z, &wz) in gx.iter().zip(gw.iter()) {
                let x = mid + half * z;
                let weight = wz * half * h * self.pdf((offset + x) * h);
                match width {
                    1 => {
                        out[0] += weight * (1.0 - x);
                        out[1] += weight * x;
                    }
                    _ => {
                        out[0] += weight * 0.5 * (x - 1.0) * (x - 2.0);
                        out[1] += weight * x * (2.0 - x);
                        out[2] += weight * 0.5 * x * (x - 1.0);
                    }
                }
            }
        }
        out
    }
}

/// Discretized one-step operator `g ↦ f + W g` plus the row for `t = 0`.
pub struct GridOperator {
    n: usize,
    h: f64,
    a_bar: f64,
    weights: Vec<f64>,
    forcing: Vec<f64>,
    row0: Vec<f64>,
    forcing0: f64,
}

impl GridOperator {
    pub fn new(cfg: &SsctConfig, model: &SignalModel, grid: GridSpec) -> Self {
        let n = grid.points();
        let a_bar = cfg.a_bar();
        let h = (cfg.b_bar() - a_bar) / (n - 1) as f64;
        let kernel = Kernel { model, delta_bar: cfg.delta_bar() };
        let width = match grid.quadrature() {
            Quadrature::Trapezoid => 1,
            Quadrature::Simpson => 2,
        };
        let panels = (n - 1) / width;

        // panel integrals by integer offset d = start - i, d in [-(n-1), n-1]
        let span = n as isize - 1;
        let by_offset: Vec<[f64; 3]> = (-span..=span).map(|d| kernel.basis_integrals(d as f64, width, h)).collect();

        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            let row = &mut weights[i * n..(i + 1) * n];
            for p in 0..panels {
                let start = p * width;
                let w = &by_offset[(start as isize - i as isize + span) as usize];
                for r in 0..=width {
                    row[start + r] += w[r];
                }
            }
        }

        let mut row0 = vec![0.0; n];
        for p in 0..panels {
            let start = p * width;
            let offset = (a_bar + start as f64 * h) / h;
            let w = kernel.basis_integrals(offset, width, h);
            for r in 0..=width {
                row0[start + r] += w[r];
            }
        }

        let forcing = (0..n).map(|i| kernel.cdf(a_bar - (a_bar + i as f64 * h))).collect();
        GridOperator { n, h, a_bar, weights, forcing, row0, forcing0: kernel.cdf(a_bar) }
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a_bar + i as f64 * self.h
    }

    /// One backward step for several columns at once; `g` is row-major
    /// `n × cols`. Returns the new columns and their values at `t = 0`.
    fn step(&self, g: &[f64], cols: usize, out: &mut [f64], at_zero: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.weights[i * n..(i + 1) * n];
            dot_cols(row, g, cols, &mut out[i * cols..(i + 1) * cols]);
            for c in 0..cols {
                out[i * cols + c] += self.forcing[i];
            }
        }
        dot_cols(&self.row0, g, cols, at_zero);
        for v in at_zero.iter_mut() {
            *v += self.forcing0;
        }
    }
}

fn dot_cols(row: &[f64], g: &[f64], cols: usize, out: &mut [f64]) {
    match cols {
        1 => out[0] = dot(row, g),
        3 => {
            let mut acc = [[0.0f64; 3]; 4];
            let chunks = row.len() / 4;
            for c in 0..chunks {
                for l in 0..4 {
                    let j = c * 4 + l;
                    let w = row[j];
                    let gj = &g[j * 3..j * 3 + 3];
                    acc[l][0] += w * gj[0];
                    acc[l][1] += w * gj[1];
                    acc[l][2] += w * gj[2];
                }
            }
            let mut s = [0.0; 3];
            for lane in acc {
                for k in 0..3 {
                    s[k] += lane[k];
                }
            }
            for j in chunks * 4..row.len() {
                for k in 0..3 {
                    s[k] += row[j] * g[j * 3 + k];
                }
            }
            out.copy_from_slice(&s);
        }
        _ => {
            for (c, o) in out.iter_mut().enumerate().take(cols) {
                *o = row.iter().enumerate().map(|(j, w)| w * g[j * cols + c]).sum();
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        for l in 0..8 {
            acc[l] += a[c * 8 + l] * b[c * 8 + l];
        }
    }
    let mut s: f64 = acc.iter().sum();
    for j in chunks * 8..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// Output of one backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// `G_k(0, thr_c)` for `k = 1..=K`, indexed `[k-1][c]`.
    pub at_zero: Vec<Vec<f64>>,
    /// Largest increase of any `G_k` between neighbouring nodes.
    pub monotonicity_violation: f64,
    pub quadrature: Quadrature,
}

/// Runs `steps` backward steps for each terminal threshold.
pub fn sweep(cfg: &SsctConfig, model: &SignalModel, grid: GridSpec, thresholds: &[f64], steps: usize) -> Result<Sweep> {
    for &thr in thresholds {
        if !(thr >= cfg.a_bar() && thr <= cfg.b_bar()) {
            return Err(SsctError::Contract(format!(
                "terminal threshold {thr} must lie in [ā, b̄] = [{}, {}]",
                cfg.a_bar(),
                cfg.b_bar()
            )));
        }
    }
    if steps == 0 {
        return Err(SsctError::Contract("sweep needs at least one step".into()));
    }
    let op = GridOperator::new(cfg, model, grid);
    let n = op.points();
    let cols = thresholds.len();
    let delta = cfg.delta_bar();
    let mut g = vec![0.0; n * cols];
    for i in 0..n {
        let t = op.node(i);
        for (c, &thr) in thresholds.iter().enumerate() {
            g[i * cols + c] = model.increment_cdf(thr - t, delta);
        }
    }
    let first: Vec<f64> = thresholds.iter().map(|&thr| model.increment_cdf(thr, delta)).collect();
    let mut at_zero = Vec::with_capacity(steps);
    at_zero.push(first);
    let mut violation = monotone_violation(&g, cols);
    let mut next = vec![0.0; n * cols];
    let mut zero = vec![0.0; cols];
    for _ in 1..steps {
        op.step(&g, cols, &mut next, &mut zero);
        std::mem::swap(&mut g, &mut next);
        violation = violation.max(monotone_violation(&g, cols));
        at_zero.push(zero.clone());
    }
    Ok(Sweep { at_zero, monotonicity_violation: violation, quadrature: grid.quadrature() })
}

fn monotone_violation(g: &[f64], cols: usize) -> f64 {
    let n = g.len() / cols;
    let mut worst = 0.0f64;
    for i in 1..n {
        for c in 0..cols {
            worst = worst.max(g[i * cols + c] - g[(i - 1) * cols + c]);
        }
    }
    worst
}

/// Tolerance on the nonincreasing-in-`t` check for the linear interpolant.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

/// `G_M(0, thr)`: with `thr = γ̄` this is the miss-detection probability.
pub fn miss_detection_grid(
    cfg: &SsctConfig,
    model: &SignalModel,
    grid: GridSpec,
    terminal_threshold: f64,
) -> Result<f64> {
    let s = sweep(cfg, model, grid, &[terminal_threshold], cfg.m())?;
    check_monotone(&s)?;
    Ok(s.at_zero[cfg.m() - 1][0].clamp(0.0, 1.0))
}

pub(crate) fn check_monotone(s: &Sweep) -> Result<()> {
    if s.monotonicity_violation > s.quadrature.monotone_tolerance() {
        return Err(SsctError::Contract(format!(
            "grid recursion lost monotonicity in t by {:.3e}",
            s.monotonicity_violation
        )));
    }
    Ok(())
}
