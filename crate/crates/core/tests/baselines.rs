use proptest::prelude::*;
use ssct::baselines::{
    ed_error_probs, ed_min_samples, ed_min_samples_real, sprt_run, sprt_simulate, EnergyDetectorConfig, SprtConfig,
};
use ssct::montecarlo::{EnergyStream, Hypothesis};
use ssct::signal::{db_to_linear, SignalModel};

#[test]
fn published_sample_sizes() {
    // Table rows 40/140/730/4450; the last two differ (see the ledger)
    let got: Vec<usize> = [(0.0, 0.01), (-5.0, 0.05), (-10.0, 0.10), (-15.0, 0.15)]
        .iter()
        .map(|&(db, t)| ed_min_samples(db_to_linear(db), t, t).unwrap())
        .collect();
    assert_eq!(got, vec![41, 141, 722, 4432]);
}

#[test]
fn sample_size_scales_as_inverse_square_snr() {
    for snr in [0.1, 0.01] {
        let ratio = ed_min_samples_real(snr / 10.0, 0.1, 0.1).unwrap() / ed_min_samples_real(snr, 0.1, 0.1).unwrap();
        assert!((ratio / 100.0 - 1.0).abs() < 0.1, "{snr}: {ratio}");
    }
}

#[test]
fn false_alarm_does_not_depend_on_operating_snr() {
    let ed = EnergyDetectorConfig::design(4450, 0.15, db_to_linear(-15.0)).unwrap();
    let alpha = ed_error_probs(&ed, db_to_linear(-15.0)).0;
    for db in [-12.0, -13.0, -14.0] {
        assert_eq!(ed_error_probs(&ed, db_to_linear(db)).0, alpha);
    }
}

#[test]
fn wald_thresholds_are_conservative() {
    let snr = db_to_linear(-5.0);
    let model = SignalModel::qpsk(snr).unwrap();
    let cfg = SprtConfig::wald(0.05, 0.05, 2.0 * snr).unwrap();
    let trials = 100_000;
    let h0 = sprt_simulate(&cfg, &model, Hypothesis::H0, trials, 11).unwrap();
    let h1 = sprt_simulate(&cfg, &model, Hypothesis::H1, trials, 12).unwrap();
    assert!(h0.error.point <= 0.05 + 3.0 * h0.error.std_err, "{:?}", h0.error);
    assert!(h1.error.point <= 0.05 + 3.0 * h1.error.std_err, "{:?}", h1.error);
}

#[test]
fn runner_and_simulator_agree() {
    let snr = db_to_linear(-5.0);
    let model = SignalModel::qpsk(snr).unwrap();
    let cfg = SprtConfig::wald(0.05, 0.05, 2.0 * snr).unwrap();
    let mut rejected = 0u64;
    let mut samples = 0usize;
    let trials = 10_000u64;
    for k in 0..trials {
        let stream = EnergyStream::new(Hypothesis::H1, &model, 1.0, 12, k).map(|e| 2.0 * e);
        let (r, n) = sprt_run(&cfg, stream, 1_000_000).unwrap();
        rejected += r as u64;
        samples += n;
    }
    let sim = sprt_simulate(&cfg, &model, Hypothesis::H1, trials, 12).unwrap();
    assert_eq!(trials - rejected, (sim.error.point * trials as f64).round() as u64);
    assert!((samples as f64 / trials as f64 - sim.asn.point).abs() < 1e-12);
}

proptest! {
    #[test]
    fn looser_targets_need_fewer_samples(snr in 0.01..3.0f64, a in 0.001..0.4f64, b in 0.001..0.4f64, da in 0.0..0.09f64, db in 0.0..0.09f64) {
        let tight = ed_min_samples(snr, a, b).unwrap();
        prop_assert!(ed_min_samples(snr, a + da, b).unwrap() <= tight);
        prop_assert!(ed_min_samples(snr, a, b + db).unwrap() <= tight);
    }
}
