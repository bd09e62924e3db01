//! Independent references for the integration tests.
//!
//! The continuation region for `N` samples is `0 <= ξ_1 <= ... <= ξ_N` with
//! `a_i < ξ_i < b_i`. Let `F_1 = 1` and
//! `F_{k+1}(x) = ∫_{a_k}^{min(b_k, x)} F_k(y) dy`. Then `I^(N)` is the
//! integral of `F_N` over `(a_N, b_N)` and `J^(N)_{c,d}(θ)` is the integral of
//! `e^{-θx} F_N(x)` over `(c, d)`. Each `F_k` is a piecewise polynomial with
//! breaks at the boundaries, so Gauss-Legendre on the pieces is exact up to
//! rounding. Nothing here shares code with the library's recurrences.

#![allow(dead_code)]

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use ssct::boundary::SsctConfig;

pub struct Region {
    a: Vec<f64>,
    b: Vec<f64>,
    poly: GaussLegendre,
    smooth: GaussLegendre,
}

impl Region {
    /// Boundaries `a_1..=a_n`, `b_1..=b_n`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), b.len());
        Region {
            a,
            b,
            poly: GaussLegendre::new(NonZeroUsize::new(8).unwrap()),
            smooth: GaussLegendre::new(NonZeroUsize::new(24).unwrap()),
        }
    }

    pub fn from_config(cfg: &SsctConfig, n: usize) -> Self {
        let seq = cfg.boundaries();
        Region::new((1..=n).map(|i| seq.lower(i)).collect(), (1..=n).map(|i| seq.upper(i)).collect())
    }

    fn breaks(&self, k: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo];
        for j in 0..k {
            for &x in [self.a[j], self.b[j]].iter() {
                if x > lo && x < hi {
                    pts.push(x);
                }
            }
        }
        pts.push(hi);
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        pts
    }

    /// `F_k(x)`, `k >= 1`.
    pub fn density(&self, k: usize, x: f64) -> f64 {
        if k == 1 {
            return if x >= 0.0 { 1.0 } else { 0.0 };
        }
        let lo = self.a[k - 2];
        let hi = self.b[k - 2].min(x);
        if hi <= lo {
            return 0.0;
        }
        let pts = self.breaks(k - 2, lo, hi);
        pts.windows(2).map(|w| self.poly.integrate(w[0], w[1], |y| self.density(k - 1, y))).sum()
    }

    /// `I^(n)`.
    pub fn volume(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        self.density(n + 1, self.b[n - 1] + 1.0)
    }

    /// `J^(n)_{c,d}(θ)`; `d = None` is `+∞`.
    pub fn weighted(&self, n: usize, c: f64, d: Option<f64>, theta: f64) -> f64 {
        // past b_{n-1} the density is the constant I^(n-1)
        let flat = if n == 1 { 0.0 } else { self.b[n - 2] };
        let top = d.unwrap_or(f64::INFINITY);
        let lo = c.max(0.0);
        let mid = flat.max(lo).min(top);
        let mut total = 0.0;
        if mid > lo {
            let pts = self.breaks(n - 1, lo, mid);
            for w in pts.windows(2) {
                let pieces = ((w[1] - w[0]) / 0.5).ceil().max(1.0) as usize;
                let h = (w[1] - w[0]) / pieces as f64;
                for i in 0..pieces {
                    let (x0, x1) = (w[0] + i as f64 * h, w[0] + (i + 1) as f64 * h);
                    total += self.smooth.integrate(x0, x1, |x| (-theta * x).exp() * self.density(n, x));
                }
            }
        }
        let vol = self.volume(n - 1);
        total += match d {
            None => vol * (-theta * mid).exp() / theta,
            Some(d) if d > mid => vol * ((-theta * mid).exp() - (-theta * d).exp()) / theta,
            Some(_) => 0.0,
        };
        total
    }
}

/// Relative difference with an absolute floor.
pub fn rel_diff(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1e-300)
}
