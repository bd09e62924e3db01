use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssct::boundary::SsctConfig;
use ssct::detector::Detector;
use ssct::grid::GridSpec;
use ssct::integrals::j_band;
use ssct::montecarlo::{estimate, run_trials, EnergyStream, Hypothesis, SimSpec};
use ssct::performance::{exact_h0, grid_h1_estimated, h1_increment_pdf};
use ssct::presets::snr_designs;
use ssct::real::Precision;
use ssct::signal::SignalModel;

const TRIALS: u64 = 1_000_000;

/// Random small designs with their operating SNR.
fn random_designs(count: usize) -> Vec<(SsctConfig, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut out = Vec::new();
    while out.len() < count {
        let snr = rng.gen_range(0.3..2.0);
        let delta = 2.0 + snr * rng.gen_range(0.6..1.4);
        let b = rng.gen_range(5.0..30.0);
        let a = -rng.gen_range(5.0..30.0);
        let g = a + (b - a) * rng.gen_range(0.2..0.8);
        let m = rng.gen_range(5..=60);
        if let Ok(cfg) = SsctConfig::new(a, b, g, delta, m, snr, 1.0) {
            out.push((cfg, snr * rng.gen_range(0.7..1.5)));
        }
    }
    out
}

fn simulate(cfg: &SsctConfig, model: &SignalModel, h: Hypothesis, seed: u64) -> ssct::montecarlo::SimOutcome {
    estimate(&SimSpec { trials: TRIALS, seed, hypothesis: h, model: model.clone(), cfg: *cfg }).unwrap()
}

#[test]
fn exact_false_alarm_matches_simulation() {
    for (i, (cfg, snr_o)) in random_designs(10).into_iter().enumerate() {
        let model = SignalModel::qpsk(snr_o).unwrap();
        let exact = exact_h0(&cfg, Precision::Native).unwrap();
        let mc = simulate(&cfg, &model, Hypothesis::H0, 1000 + i as u64);
        assert!(mc.error.within(exact.alpha, 3.0), "{cfg:?}: exact {} vs {:?}", exact.alpha, mc.error);
        assert!(mc.asn.within(exact.asn.unwrap(), 3.0), "{cfg:?}: exact ASN {:?} vs {:?}", exact.asn, mc.asn);
    }
}

#[test]
fn grid_miss_probability_matches_simulation() {
    for (i, (cfg, snr_o)) in random_designs(10).into_iter().enumerate() {
        let models = [
            SignalModel::qpsk(snr_o).unwrap(),
            SignalModel::mixture(vec![(0.5 * snr_o, 0.5), (3.5 * snr_o, 0.5)]).unwrap(),
        ];
        for (j, model) in models.iter().enumerate() {
            let g = grid_h1_estimated(&cfg, model, GridSpec::auto(&cfg)).unwrap();
            let mc = simulate(&cfg, model, Hypothesis::H1, 2000 + 10 * i as u64 + j as u64);
            let slack = 3.0 * mc.error.std_err + g.beta_error.unwrap_or(0.0);
            assert!((g.beta - mc.error.point).abs() <= slack, "{cfg:?} model {j}: grid {} vs {:?}", g.beta, mc.error);
        }
    }
}

#[test]
fn design_points_match_simulation() {
    for s in snr_designs().unwrap().into_iter().filter(|s| s.cfg.m() <= 140) {
        let model = SignalModel::qpsk(s.cfg.snr_m()).unwrap();
        let exact = exact_h0(&s.cfg, Precision::Native).unwrap();
        let g = grid_h1_estimated(&s.cfg, &model, GridSpec::auto(&s.cfg)).unwrap();
        let h0 = simulate(&s.cfg, &model, Hypothesis::H0, 5);
        let h1 = simulate(&s.cfg, &model, Hypothesis::H1, 6);
        assert!(h0.error.within(exact.alpha, 3.0), "{}: {} vs {:?}", s.label, exact.alpha, h0.error);
        assert!(h0.asn.within(exact.asn.unwrap(), 3.0), "{}", s.label);
        assert!(h1.error.within(g.beta, 3.0), "{}: {} vs {:?}", s.label, g.beta, h1.error);
        assert!(h1.asn.within(g.asn, 3.0), "{}: {} vs {:?}", s.label, g.asn, h1.asn);
    }
}

#[test]
fn band_integral_is_the_continuation_probability() {
    let cfg = SsctConfig::new(-35.32, 35.32, -5.69, 2.316, 140, 10f64.powf(-0.5), 1.0).unwrap();
    let seq = cfg.boundaries();
    let n = 50;
    let model = SignalModel::qpsk(cfg.snr_m()).unwrap();
    let tally = run_trials(TRIALS, |k| {
        let mut det = Detector::new(cfg);
        for (i, e) in EnergyStream::new(Hypothesis::H0, &model, 1.0, 9, k).enumerate() {
            if det.step(e)?.is_terminal() {
                return Ok((i + 1 > n, i + 1, false));
            }
        }
        unreachable!()
    })
    .unwrap();
    let p = j_band(n, 0.5, &seq).unwrap() * 0.5f64.powi(n as i32);
    let mc = tally.outcome().error;
    assert!(mc.within(p, 3.0), "{p} vs {mc:?}");
}

#[test]
fn increment_density_integrates_to_one() {
    let gl = GaussLegendre::new(NonZeroUsize::new(40).unwrap());
    let cfg = snr_designs().unwrap()[1].cfg;
    let models = [
        SignalModel::qpsk(0.316).unwrap(),
        SignalModel::qam64(1.0).unwrap(),
        SignalModel::qam64(0.0316).unwrap(),
        SignalModel::mixture(vec![(0.1, 0.3), (4.0, 0.7)]).unwrap(),
    ];
    for model in models {
        let lo = -cfg.delta_bar();
        // the density has a kink at the support edge and decays like e^{-u/2}
        let total: f64 = (0..200)
            .map(|i| lo + i as f64)
            .map(|x| gl.integrate(x, x + 1.0, |u| h1_increment_pdf(u, &model, &cfg)))
            .sum();
        assert!((total - 1.0).abs() < 1e-8, "{model:?}: {total}");
    }
}

#[test]
fn grid_refinement_barely_moves_the_miss_probability() {
    for s in snr_designs().unwrap().into_iter().take(2) {
        let model = SignalModel::qpsk(s.cfg.snr_m()).unwrap();
        let spec = GridSpec::auto(&s.cfg);
        let coarse = grid_h1_estimated(&s.cfg, &model, spec).unwrap();
        let fine = grid_h1_estimated(&s.cfg, &model, spec.refined()).unwrap();
        assert!((coarse.beta - fine.beta).abs() < 1e-4, "{}: {} vs {}", s.label, coarse.beta, fine.beta);
    }
}

#[test]
fn null_energy_at_truncation_is_approximately_normal() {
    // ξ_M under H0 is chi-square with 2M degrees of freedom
    let cfg = snr_designs().unwrap()[1].cfg;
    let m = cfg.m();
    let model = SignalModel::qpsk(cfg.snr_m()).unwrap();
    let n = 100_000u64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 0..n {
        let xi: f64 = EnergyStream::new(Hypothesis::H0, &model, 1.0, 3, k).take(m).map(|e| 2.0 * e).sum();
        s1 += xi;
        s2 += xi * xi;
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    let mf = m as f64;
    assert!((mean / (2.0 * mf) - 1.0).abs() < 0.01, "{mean}");
    assert!((var / (4.0 * mf) - 1.0).abs() < 0.01, "{var}");
}
