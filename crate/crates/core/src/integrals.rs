//! Exact nested integrals over the continuation region.
//!
//! Three objects are involved:
//!
//! * [`PolyIntegral`]: the ordered-lower-limit integral
//!   `f^(k)(ξ) = ∫_{χ_k}^{ξ} ∫_{χ_{k-1}}^{ξ_k} ... dξ_1` written as
//!   `Σ_{i<k} f_i (ξ - χ_{i+1})^{k-i}/(k-i)! + f_k`, with
//!   `f_k = -Σ_{i<k} f_i (χ_k - χ_{i+1})^{k-i}/(k-i)!` and `f_0 = 1`.
//!   Appending a knot appends one coefficient, so every prefix of a knot list
//!   is available from a single build.
//! * the volumes `I^(N)` of the continuation region `{a_i < ξ_i < b_i}`;
//! * the exponentially weighted integrals `J^(N)_{c,d}(θ)` whose values give
//!   the null-hypothesis crossing probabilities.
//!
//! [`ExactEngine`] evaluates the last two on a halved scale (`ξ/2`), where
//! the null density `2^{-N} e^{-ξ_N/2}` becomes `e^{-ξ'_N}` and all
//! magnitudes stay in range up to a few hundred samples.

use crate::boundary::{BoundarySequences, SsctConfig};
use crate::error::{Result, SsctError};
use crate::real::{pow_over_factorial, CompensatedSum, Real};

/// Lemma-style coefficient form of an ordered-lower-limit integral.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyIntegral<R: Real = f64> {
    knots: Vec<R>,
    coeffs: Vec<R>,
}

impl<R: Real> Default for PolyIntegral<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> PolyIntegral<R> {
    /// The order-0 integral, identically 1.
    pub fn new() -> Self {
        PolyIntegral { knots: Vec::new(), coeffs: vec![R::one()] }
    }

    /// Builds from nondecreasing, nonnegative knots.
    pub fn build(knots: &[R]) -> Result<Self> {
        let mut p = Self::new();
        p.knots.reserve(knots.len());
        p.coeffs.reserve(knots.len());
        for &k in knots {
            p.push(k)?;
        }
        Ok(p)
    }

    /// Appends a knot; existing coefficients are unchanged.
    pub fn push(&mut self, knot: R) -> Result<()> {
        if !knot.is_finite() || knot < R::zero() {
            return Err(SsctError::Domain(format!("knot {knot:?} must be finite and nonnegative")));
        }
        if let Some(&last) = self.knots.last() {
            if knot < last {
                return Err(SsctError::Domain(format!("knots must be nondecreasing: {knot:?} after {last:?}")));
            }
        }
        self.knots.push(knot);
        let k = self.knots.len();
        let mut acc = CompensatedSum::new();
        for i in 0..k {
            let f = self.coeffs[i];
            if f.is_zero() {
                continue;
            }
            acc.add(f * pow_over_factorial(knot - self.knots[i], k - i));
        }
        self.coeffs.push(-acc.value());
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[R] {
        &self.knots
    }

    /// `f_0, ..., f_k`.
    pub fn coefficients(&self) -> &[R] {
        &self.coeffs
    }

    /// `f^(k)(ξ)` for the full knot list.
    pub fn eval(&self, xi: R) -> R {
        self.eval_prefix(self.order(), xi)
    }

    /// `f^(k)(ξ)` using only the first `k` knots.
    pub fn eval_prefix(&self, k: usize, xi: R) -> R {
        assert!(k <= self.order(), "prefix {k} longer than {} knots", self.order());
        let mut acc = CompensatedSum::new();
        for i in 0..k {
            let f = self.coeffs[i];
            if f.is_zero() {
                continue;
            }
            acc.add(f * pow_over_factorial(xi - self.knots[i], k - i));
        }
        acc.add(self.coeffs[k]);
        acc.value()
    }

    /// `[f^(0)(ξ), ..., f^(upto)(ξ)]` over successive prefixes.
    pub fn eval_prefixes(&self, xi: R, upto: usize) -> Vec<R> {
        assert!(upto <= self.order(), "prefix {upto} longer than {} knots", self.order());
        let mut acc: Vec<CompensatedSum<R>> = self.coeffs[..=upto]
            .iter()
            .map(|&c| {
                let mut s = CompensatedSum::new();
                s.add(c);
                s
            })
            .collect();
        for i in 0..upto {
            let f = self.coeffs[i];
            if f.is_zero() {
                continue;
            }
            let base = xi - self.knots[i];
            let mut h = R::one();
            for (j, slot) in acc.iter_mut().enumerate().skip(i + 1) {
                h = (h * base).div_f64((j - i) as f64);
                slot.add(f * h);
            }
        }
        acc.iter().map(CompensatedSum::value).collect()
    }

    /// Order-`(k+1)` integral whose knots are the first `k` knots followed
    /// by `last`, evaluated at `ξ`.
    pub fn eval_prefix_with_last(&self, k: usize, last: R, xi: R) -> R {
        assert!(k <= self.order(), "prefix {k} longer than {} knots", self.order());
        let order = k + 1;
        let mut acc = CompensatedSum::new();
        for i in 0..k {
            let f = self.coeffs[i];
            if f.is_zero() {
                continue;
            }
            let m = order - i;
            acc.add(f * pow_over_factorial(xi - self.knots[i], m));
            acc.add(-(f * pow_over_factorial(last - self.knots[i], m)));
        }
        acc.add(self.coeffs[k] * (xi - last));
        acc.value()
    }
}

/// `poly_build` for `f64` knots.
pub fn poly_build(knots: &[f64]) -> Result<PolyIntegral<f64>> {
    PolyIntegral::build(knots)
}

/// `poly_eval` for `f64`.
pub fn poly_eval(p: &PolyIntegral<f64>, xi: f64) -> f64 {
    p.eval(xi)
}

/// Volumes `I^(0), ..., I^(N_max)` of the continuation region.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTable {
    values: Vec<f64>,
}

impl VolumeTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.values.get(n).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Largest |value| that went into a cancelling sum, kept next to the result.
#[derive(Debug, Clone, Copy)]
pub struct Tracked<R: Real> {
    pub value: R,
    pub magnitude: f64,
}

/// Exact recursions for one configuration on the scale `t·ξ`.
///
/// All state is built once in [`ExactEngine::new`] and shared read-only.
#[derive(Debug, Clone)]
pub struct ExactEngine<R: Real = f64> {
    seq: BoundarySequences,
    horizon: usize,
    scale: f64,
    a: Vec<R>,
    b: Vec<R>,
    fam_a: PolyIntegral<R>,
    fams: Vec<PolyIntegral<R>>,
    vol: Vec<Tracked<R>>,
}

impl<R: Real> ExactEngine<R> {
    /// Prepares polynomials and volumes for `N <= horizon` (`horizon <= M`).
    pub fn new(seq: &BoundarySequences, horizon: usize, scale: f64) -> Result<Self> {
        if horizon == 0 || horizon > seq.m() {
            return Err(SsctError::Contract(format!("horizon {horizon} must lie in 1..={}", seq.m())));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(SsctError::Contract(format!("scale must be positive, got {scale}")));
        }
        let cfg = seq.config();
        let lift = |x: f64| R::from_f64(x);
        let delta = lift(cfg.delta_bar());
        let a: Vec<R> =
            (0..=horizon)
                .map(|i| {
                    if i <= seq.p() {
                        R::zero()
                    } else {
                        (lift(cfg.a_bar()) + R::from_usize(i) * delta).mul_f64(scale)
                    }
                })
                .collect();
        let b: Vec<R> = (0..=horizon).map(|i| (lift(cfg.b_bar()) + R::from_usize(i) * delta).mul_f64(scale)).collect();

        let fam_a = PolyIntegral::build(&a[1..=horizon])?;
        let q = seq.q();
        let mut fams = Vec::with_capacity(horizon.saturating_sub(1));
        for n in 0..horizon.saturating_sub(1) {
            let len = horizon - n - 1;
            let mut p = PolyIntegral::new();
            for j in 0..len {
                let knot = if j < q { b[n + 1] } else { a[n + 1 + j] };
                p.push(knot)?;
            }
            fams.push(p);
        }

        let mut engine = ExactEngine { seq: seq.clone(), horizon, scale, a, b, fam_a, fams, vol: Vec::new() };
        engine.build_volumes();
        Ok(engine)
    }

    fn build_volumes(&mut self) {
        let top = self.horizon - 1;
        let mut vol = Vec::with_capacity(top + 1);
        vol.push(Tracked { value: R::one(), magnitude: 1.0 });
        for big_n in 1..=top {
            let bn = self.b[big_n];
            let an = self.a[big_n];
            let s = self.seq.index_s_lower(big_n);
            let lead = self.fam_a.eval_prefix(big_n, bn);
            let mut acc = CompensatedSum::new();
            acc.add(lead);
            let mut magnitude = lead.abs().to_f64();
            for (n, vn) in vol.iter().enumerate().take(big_n.saturating_sub(1)) {
                let phi = if n >= s {
                    pow_over_factorial(bn - self.b[n + 1], big_n - n)
                } else {
                    self.fams[n].eval_prefix_with_last(big_n - n - 1, an, bn)
                };
                let term = phi * vn.value;
                magnitude += phi.abs().to_f64() * vn.magnitude;
                acc.add(-term);
            }
            vol.push(Tracked { value: acc.value(), magnitude });
        }
        self.vol = vol;
    }

    pub fn boundaries(&self) -> &BoundarySequences {
        &self.seq
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Scaled `a_i`.
    pub fn lower(&self, i: usize) -> R {
        self.a[i]
    }

    /// Scaled `b_i`.
    pub fn upper(&self, i: usize) -> R {
        self.b[i]
    }

    /// Scaled volume `t^N I^(N)` for `N < horizon`.
    pub fn volume(&self, n: usize) -> R {
        self.vol[n].value
    }

    pub fn volume_tracked(&self, n: usize) -> Tracked<R> {
        self.vol[n]
    }

    /// Number of volumes available (`horizon`).
    pub fn volume_count(&self) -> usize {
        self.vol.len()
    }

    /// `g^(n)_{c,d}(θ)` on the engine scale; `d = None` means `+∞`.
    /// `s` is the index with `b_s < c <= b_{s+1}` (0 when `c <= b_1`).
    pub fn g_term(&self, n: usize, big_n: usize, c: R, d: Option<R>, s: usize, theta: R) -> R {
        self.g_tracked(n, big_n, c, d, s, theta).value
    }

    fn g_tracked(&self, n: usize, big_n: usize, c: R, d: Option<R>, s: usize, theta: R) -> Tracked<R> {
        let inv_theta = R::one() / theta;
        let vol = self.vol[n].value;
        let k = big_n - n;
        let mut acc = CompensatedSum::new();
        let mut magnitude = 0.0;
        let mut push = |x: R, acc: &mut CompensatedSum<R>| {
            magnitude += x.abs().to_f64();
            acc.add(x);
        };
        if n >= s {
            let bn1 = self.b[n + 1];
            let head = powi(inv_theta, k) * (-(theta * bn1)).exp();
            push(head, &mut acc);
            if let Some(d) = d {
                let ed = (-(theta * d)).exp();
                let base = d - bn1;
                // Σ_i θ^{-i} (d - b_{n+1})^{k-i}/(k-i)!, h built upward from i = k
                let mut h = R::one();
                let mut th = powi(inv_theta, k);
                for j in 0..k {
                    if j > 0 {
                        h = (h * base).div_f64(j as f64);
                        th *= theta;
                    }
                    push(-(th * h * ed), &mut acc);
                }
            }
        } else {
            let fam = &self.fams[n];
            let ec = (-(theta * c)).exp();
            let vc = fam.eval_prefixes(c, k - 1);
            let vd = d.map(|d| (fam.eval_prefixes(d, k - 1), (-(theta * d)).exp()));
            let mut th = R::one();
            for i in 1..=k {
                th *= inv_theta;
                push(th * vc[k - i] * ec, &mut acc);
                if let Some((vd, ed)) = &vd {
                    push(-(th * vd[k - i] * *ed), &mut acc);
                }
            }
        }
        Tracked {
            value: vol * acc.value(),
            magnitude: magnitude * vol.abs().to_f64() + self.vol[n].magnitude * acc.value().abs().to_f64(),
        }
    }

    fn j_tracked(&self, big_n: usize, c: R, d: Option<R>, s: usize, theta: R) -> Tracked<R> {
        let inv_theta = R::one() / theta;
        let vc = self.fam_a.eval_prefixes(c, big_n - 1);
        let ec = (-(theta * c)).exp();
        let vd = d.map(|d| (self.fam_a.eval_prefixes(d, big_n - 1), (-(theta * d)).exp()));
        let mut acc = CompensatedSum::new();
        let mut magnitude = 0.0;
        let mut th = R::one();
        for i in 1..=big_n {
            th *= inv_theta;
            let x = th * vc[big_n - i] * ec;
            magnitude += x.abs().to_f64();
            acc.add(x);
            if let Some((vd, ed)) = &vd {
                let y = th * vd[big_n - i] * *ed;
                magnitude += y.abs().to_f64();
                acc.add(-y);
            }
        }
        for n in 0..big_n.saturating_sub(1) {
            let g = self.g_tracked(n, big_n, c, d, s, theta);
            magnitude += g.magnitude;
            acc.add(-g.value);
        }
        Tracked { value: acc.value(), magnitude }
    }

    fn check_j_args(&self, big_n: usize) -> Result<()> {
        if big_n == 0 || big_n > self.horizon {
            return Err(SsctError::Contract(format!("N = {big_n} outside 1..={}", self.horizon)));
        }
        Ok(())
    }

    /// Scaled `J^(N)_{c,∞}(θ)` for `a_N <= c < b_N`, with `c` and `θ` on the
    /// engine scale and `s` the index of the unscaled `c`.
    pub fn j_upper_scaled(&self, big_n: usize, c: R, s: usize, theta: R) -> Result<R> {
        self.check_j_args(big_n)?;
        if !(c >= self.a[big_n] && c < self.b[big_n]) {
            return Err(SsctError::Contract(format!(
                "j_upper needs a_N <= c < b_N, got c = {:?} with a_N = {:?}, b_N = {:?}",
                c, self.a[big_n], self.b[big_n]
            )));
        }
        Ok(self.j_tracked(big_n, c, None, s, theta).value)
    }

    pub fn j_upper_tracked(&self, big_n: usize, c: R, s: usize, theta: R) -> Tracked<R> {
        self.j_tracked(big_n, c, None, s, theta)
    }

    /// Scaled `J^(N)_{a_N,b_N}(θ)` for `N < horizon`.
    pub fn j_band_scaled(&self, big_n: usize, theta: R) -> Result<R> {
        self.check_j_args(big_n)?;
        if big_n >= self.horizon {
            return Err(SsctError::Contract(format!("j_band needs N < {}", self.horizon)));
        }
        Ok(self.j_band_tracked(big_n, theta).value)
    }

    pub fn j_band_tracked(&self, big_n: usize, theta: R) -> Tracked<R> {
        let s = self.seq.index_s_lower(big_n);
        self.j_tracked(big_n, self.a[big_n], Some(self.b[big_n]), s, theta)
    }
}

fn powi<R: Real>(x: R, k: usize) -> R {
    let mut r = R::one();
    for _ in 0..k {
        r *= x;
    }
    r
}

fn horizon_engine(seq: &BoundarySequences, horizon: usize) -> Result<ExactEngine<f64>> {
    ExactEngine::new(seq, horizon, 0.5)
}

/// `I^(0), ..., I^(N_max)` in normalized units, `N_max <= M - 1`.
pub fn volume_table(n_max: usize, seq: &BoundarySequences) -> Result<VolumeTable> {
    if n_max + 1 > seq.m() {
        return Err(SsctError::Contract(format!("N_max = {n_max} must be at most M - 1 = {}", seq.m() - 1)));
    }
    let engine = horizon_engine(seq, n_max + 1)?;
    let values = (0..=n_max).map(|n| engine.volume(n) * 2f64.powi(n as i32)).collect();
    Ok(VolumeTable { values })
}

/// `J^(N)_{c,∞}(θ)` in normalized units, for `a_N <= c < b_N`.
pub fn j_upper(big_n: usize, c: f64, theta: f64, seq: &BoundarySequences) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(SsctError::Contract(format!("θ must be positive, got {theta}")));
    }
    let engine = horizon_engine(seq, big_n)?;
    let s = if c > 0.0 { seq.index_s(c)? } else { 0 };
    Ok(engine.j_upper_scaled(big_n, c * 0.5, s, 2.0 * theta)? * 2f64.powi(big_n as i32))
}

/// `J^(N)_{a_N,b_N}(θ)` in normalized units, for `N <= M - 1`.
pub fn j_band(big_n: usize, theta: f64, seq: &BoundarySequences) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(SsctError::Contract(format!("θ must be positive, got {theta}")));
    }
    if big_n == 0 || big_n + 1 > seq.m() {
        return Err(SsctError::Contract(format!("j_band needs 1 <= N <= M - 1, got {big_n}")));
    }
    let engine = horizon_engine(seq, big_n + 1)?;
    Ok(engine.j_band_scaled(big_n, 2.0 * theta)? * 2f64.powi(big_n as i32))
}

/// `g^(n)_{c,d}(θ)` in normalized units; `d = None` stands for `+∞`.
pub fn g_term(n: usize, c: f64, d: Option<f64>, theta: f64, big_n: usize, seq: &BoundarySequences) -> Result<f64> {
    if big_n < 2 || n + 2 > big_n {
        return Err(SsctError::Contract(format!("g_term needs n <= N - 2, got n = {n}, N = {big_n}")));
    }
    if !(theta > 0.0) {
        return Err(SsctError::Contract(format!("θ must be positive, got {theta}")));
    }
    let lo = seq.lower(big_n - 1);
    if !(c >= lo && c <= seq.upper(big_n)) {
        return Err(SsctError::Contract(format!("g_term needs a_(N-1) <= c <= b_N, got c = {c}")));
    }
    if let Some(d) = d {
        if !(d > c && d >= seq.lower(big_n)) {
            return Err(SsctError::Contract(format!("g_term needs d > c and d >= a_N, got d = {d}")));
        }
    }
    let engine = horizon_engine(seq, big_n)?;
    let s = if c > 0.0 { seq.index_s(c)? } else { 0 };
    let g = engine.g_term(n, big_n, c * 0.5, d.map(|d| d * 0.5), s, 2.0 * theta);
    Ok(g * 2f64.powi(big_n as i32))
}

/// Convenience: boundaries for a configuration.
pub fn boundaries(cfg: &SsctConfig) -> BoundarySequences {
    cfg.boundaries()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::DoubleDouble;

    #[test]
    fn order_zero_is_one() {
        let p = PolyIntegral::<f64>::new();
        assert_eq!(p.eval(3.7), 1.0);
        assert_eq!(p.coefficients(), &[1.0]);
    }

    #[test]
    fn repeated_knots_have_zero_tail() {
        let p = poly_build(&[1.5, 1.5, 1.5]).unwrap();
        assert_eq!(p.coefficients()[1..], [0.0, 0.0, 0.0]);
        assert!((p.eval(4.0) - 2.5f64.powi(3) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_decreasing_knots() {
        assert!(poly_build(&[1.0, 0.5]).is_err());
        assert!(poly_build(&[-1.0]).is_err());
    }

    #[test]
    fn prefixes_agree_with_rebuilt_polynomials() {
        let knots = [0.0, 0.0, 0.7, 1.3, 2.0, 2.0, 3.1];
        let full = poly_build(&knots).unwrap();
        let xi = 4.2;
        let all = full.eval_prefixes(xi, knots.len());
        for k in 0..=knots.len() {
            let direct = poly_build(&knots[..k]).unwrap().eval(xi);
            assert!((all[k] - direct).abs() < 1e-12 * direct.abs().max(1.0));
            assert!((full.eval_prefix(k, xi) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn with_last_matches_explicit_knot() {
        let knots = [0.5, 0.5, 1.0, 2.5];
        let p = poly_build(&knots).unwrap();
        for k in 0..=knots.len() {
            let mut explicit: Vec<f64> = knots[..k].to_vec();
            explicit.push(2.75);
            let want = poly_build(&explicit).unwrap().eval(3.5);
            let got = p.eval_prefix_with_last(k, 2.75, 3.5);
            assert!((want - got).abs() < 1e-13, "k = {k}: {want} vs {got}");
        }
    }

    #[test]
    fn backends_agree_on_small_problem() {
        let cfg = SsctConfig::symmetric(27.0, -8.5, 40, 1.0).unwrap();
        let seq = cfg.boundaries();
        let e64 = ExactEngine::<f64>::new(&seq, 30, 0.5).unwrap();
        let edd = ExactEngine::<DoubleDouble>::new(&seq, 30, 0.5).unwrap();
        for n in 0..30 {
            let x = e64.volume(n);
            let y = edd.volume(n).to_f64();
            assert!((x - y).abs() <= 1e-9 * y.abs(), "I({n}): {x} vs {y}");
        }
    }

    #[test]
    fn closed_form_volumes_before_p() {
        // with a_i = 0 the region volume is b_1 b_{k+1}^{k-1}/k!
        let cfg = SsctConfig::symmetric(27.0, -8.5, 40, 1.0).unwrap();
        let seq = cfg.boundaries();
        let t = volume_table(9, &seq).unwrap();
        let mut fact = 1.0;
        for k in 1..=9 {
            fact *= k as f64;
            let want = seq.upper(1) * seq.upper(k + 1).powi(k as i32 - 1) / fact;
            assert!((t.values()[k] - want).abs() < 1e-10 * want, "k = {k}");
        }
    }
}
