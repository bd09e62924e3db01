//! Seeded simulation of the received energies and of whole detector runs.
//!
//! Every trial owns a ChaCha8 stream: the generator is seeded from the
//! 64-bit run seed and switched to stream number `trial`, so trial `k`
//! produces the same samples however the trials are spread over threads.
//! Gaussian variates come from the ziggurat sampler of `rand_distr`.
//! Per-trial results are integers, so the totals do not depend on the order
//! in which threads finish.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::boundary::SsctConfig;
use crate::detector::Detector;
use crate::error::{Result, SsctError};
use crate::signal::{Modulation, SignalModel, QAM64_MEAN_ENERGY};

/// Smallest trial count accepted for a reported estimate.
pub const MIN_TRIALS: u64 = 10_000;

const BLOCK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

/// What to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub trials: u64,
    pub seed: u64,
    pub hypothesis: Hypothesis,
    /// Source model under H1; its SNR is the operating SNR.
    pub model: SignalModel,
    pub cfg: SsctConfig,
}

/// Point estimate with one standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateCI {
    pub point: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl EstimateCI {
    /// Binomial proportion `k/n`.
    pub fn proportion(k: u64, n: u64) -> Self {
        let p = k as f64 / n as f64;
        EstimateCI { point: p, std_err: (p * (1.0 - p) / n as f64).sqrt(), trials: n }
    }

    /// Sample mean from integer sums of `x` and `x²`.
    pub fn mean(sum: u128, sum_sq: u128, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum as f64 / nf;
        let var = if n > 1 { ((sum_sq as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        EstimateCI { point: mean, std_err: (var / nf).sqrt(), trials: n }
    }

    /// `|point - x| <= k·std_err`, with a floor for zero-variance estimates.
    pub fn within(&self, x: f64, k: f64) -> bool {
        (self.point - x).abs() <= k * self.std_err.max(1.0 / self.trials as f64)
    }
}

/// Summary of a batch of detector runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    /// Rejection rate under H0 (`α`), acceptance rate under H1 (`β`).
    pub error: EstimateCI,
    /// Mean `N_s`.
    pub asn: EstimateCI,
    /// `P(N_s = M)`.
    pub truncation: EstimateCI,
}

/// Energies `|h s_i + w_i|²` of one trial, with `h = 1`.
#[derive(Debug, Clone)]
pub struct EnergyStream {
    rng: ChaCha8Rng,
    noise_sd: f64,
    source: Source,
}

#[derive(Debug, Clone)]
enum Source {
    Silent,
    Qpsk(f64),
    Qam64(f64),
    /// Cumulative weights and real amplitudes.
    Mixture(Vec<(f64, f64)>),
}

const QAM_LEVELS: [f64; 8] = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];

impl EnergyStream {
    pub fn new(hypothesis: Hypothesis, model: &SignalModel, noise_power: f64, seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let source = match hypothesis {
            Hypothesis::H0 => Source::Silent,
            Hypothesis::H1 => match model.modulation() {
                // QPSK points sit at (±1 ± j)·amp/√2
                Modulation::Qpsk => Source::Qpsk((model.snr() * noise_power).sqrt() * FRAC_1_SQRT_2),
                Modulation::Qam64 => Source::Qam64((model.snr() * noise_power / QAM64_MEAN_ENERGY).sqrt()),
                Modulation::Custom => {
                    let mut acc = 0.0;
                    let table = model
                        .components()
                        .iter()
                        .map(|&(l, w)| {
                            acc += w;
                            // λ = 2|s|²/σ²
                            (acc, (0.5 * l * noise_power).sqrt())
                        })
                        .collect();
                    Source::Mixture(table)
                }
            },
        };
        EnergyStream { rng, noise_sd: (0.5 * noise_power).sqrt(), source }
    }

    fn symbol(&mut self) -> (f64, f64) {
        match &self.source {
            Source::Silent => (0.0, 0.0),
            Source::Qpsk(amp) => {
                let k: u8 = self.rng.gen_range(0..4);
                let re = if k & 1 == 0 { *amp } else { -*amp };
                let im = if k & 2 == 0 { *amp } else { -*amp };
                (re, im)
            }
            Source::Qam64(scale) => {
                let k: usize = self.rng.gen_range(0..64);
                (QAM_LEVELS[k & 7] * scale, QAM_LEVELS[k >> 3] * scale)
            }
            Source::Mixture(table) => {
                let u: f64 = self.rng.gen();
                let amp = table.iter().find(|c| u < c.0).unwrap_or(table.last().expect("non-empty")).1;
                (amp, 0.0)
            }
        }
    }
}

impl Iterator for EnergyStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let (sr, si) = self.symbol();
        let x: f64 = self.rng.sample(StandardNormal);
        let y: f64 = self.rng.sample(StandardNormal);
        let re = sr + self.noise_sd * x;
        let im = si + self.noise_sd * y;
        Some(re * re + im * im)
    }
}

/// Independent seed for sub-experiment `tag` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Energy stream for trial `trial` of `spec`.
pub fn gen_energy(spec: &SimSpec, trial: u64) -> EnergyStream {
    EnergyStream::new(spec.hypothesis, &spec.model, spec.cfg.noise_power(), spec.seed, trial)
}

/// Integer totals over a set of trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub errors: u64,
    pub samples: u128,
    pub samples_sq: u128,
    pub truncated: u64,
}

impl Tally {
    pub fn record(&mut self, error: bool, samples: usize, truncated: bool) {
        self.trials += 1;
        self.errors += error as u64;
        self.samples += samples as u128;
        self.samples_sq += (samples as u128) * (samples as u128);
        self.truncated += truncated as u64;
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.errors += other.errors;
        self.samples += other.samples;
        self.samples_sq += other.samples_sq;
        self.truncated += other.truncated;
        self
    }

    pub fn outcome(&self) -> SimOutcome {
        SimOutcome {
            error: EstimateCI::proportion(self.errors, self.trials),
            asn: EstimateCI::mean(self.samples, self.samples_sq, self.trials),
            truncation: EstimateCI::proportion(self.truncated, self.trials),
        }
    }
}

/// Runs `trials` independent episodes in parallel; `episode(k)` must depend
/// only on `k`.
pub fn run_trials<F>(trials: u64, episode: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<(bool, usize, bool)> + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut t = Tally::default();
            for k in blk * BLOCK..((blk + 1) * BLOCK).min(trials) {
                let (err, n, trunc) = episode(k)?;
                t.record(err, n, trunc);
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

/// Empirical error rate, ASN and truncation probability.
pub fn estimate(spec: &SimSpec) -> Result<SimOutcome> {
    if spec.trials < MIN_TRIALS {
        return Err(SsctError::Contract(format!("need at least {MIN_TRIALS} trials, got {}", spec.trials)));
    }
    let m = spec.cfg.m();
    let tally = run_trials(spec.trials, |k| {
        let mut det = Detector::new(spec.cfg);
        for e in gen_energy(spec, k) {
            let d = det.step(e)?;
            if let Some(n) = d.samples() {
                let error = match spec.hypothesis {
                    Hypothesis::H0 => d.rejects(),
                    Hypothesis::H1 => !d.rejects(),
                };
                return Ok((error, n, n == m));
            }
        }
        unreachable!("energy streams are unbounded")
    })?;
    Ok(tally.outcome())
}
