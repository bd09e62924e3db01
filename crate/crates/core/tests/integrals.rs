mod common;

use common::{rel_diff, Region};
use proptest::prelude::*;
use ssct::boundary::SsctConfig;
use ssct::integrals::{g_term, j_band, j_upper, poly_build, volume_table, PolyIntegral};

/// Small configurations with every kind of lower boundary: all zero, some
/// zero, none zero, and a tie between `a_Q` and `b_1`.
fn configs() -> Vec<SsctConfig> {
    vec![
        SsctConfig::new(-2.0, 3.0, 0.5, 3.0, 6, 1.0, 1.0).unwrap(),
        SsctConfig::new(-4.5, 2.5, -1.0, 2.6, 6, 0.5, 1.0).unwrap(),
        SsctConfig::new(-0.7, 1.3, 0.2, 2.9, 6, 1.0, 1.0).unwrap(),
        SsctConfig::new(-3.0, 3.0, -0.5, 3.0, 6, 1.0, 1.0).unwrap(),
        SsctConfig::symmetric(27.0, -8.5, 40, 1.0).unwrap(),
    ]
}

#[test]
fn volumes_match_nested_quadrature() {
    for cfg in configs() {
        let seq = cfg.boundaries();
        let table = volume_table(4, &seq).unwrap();
        let region = Region::from_config(&cfg, 5);
        for n in 0..=4 {
            let want = region.volume(n);
            let got = table.values()[n];
            assert!(rel_diff(got, want) < 1e-6, "{cfg:?} N = {n}: {got} vs {want}");
        }
        assert_eq!(table.values()[0], 1.0);
        assert!((table.values()[1] - (seq.upper(1) - seq.lower(1))).abs() < 1e-12);
    }
}

#[test]
fn upper_tail_integrals_match_nested_quadrature() {
    for cfg in configs() {
        let seq = cfg.boundaries();
        let region = Region::from_config(&cfg, 5);
        for n in 1..=4 {
            let (a, b) = (seq.lower(n), seq.upper(n));
            let mut cs = vec![a, 0.5 * (a + b), b - 1e-3, seq.terminal(n).clamp(a, b - 1e-3)];
            if seq.upper(1) >= a && seq.upper(1) < b {
                cs.push(seq.upper(1));
            }
            for c in cs {
                for theta in [0.5, 1.3] {
                    let got = j_upper(n, c, theta, &seq).unwrap();
                    let want = region.weighted(n, c, None, theta);
                    assert!(rel_diff(got, want) < 1e-6, "{cfg:?} N = {n}, c = {c}, θ = {theta}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn band_integrals_match_nested_quadrature() {
    for cfg in configs() {
        let seq = cfg.boundaries();
        let region = Region::from_config(&cfg, 5);
        for n in 1..=4 {
            for theta in [0.5, 0.9] {
                let got = j_band(n, theta, &seq).unwrap();
                let want = region.weighted(n, seq.lower(n), Some(seq.upper(n)), theta);
                assert!(rel_diff(got, want) < 1e-6, "{cfg:?} N = {n}, θ = {theta}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn single_sample_closed_forms() {
    let cfg = configs()[0];
    let seq = cfg.boundaries();
    let c = seq.terminal(1);
    assert!(rel_diff(j_upper(1, c, 0.5, &seq).unwrap(), 2.0 * (-0.5 * c).exp()) < 1e-13);
    let want = 2.0 * ((-0.5 * seq.lower(1)).exp() - (-0.5 * seq.upper(1)).exp());
    assert!(rel_diff(j_band(1, 0.5, &seq).unwrap(), want) < 1e-13);
}

#[test]
fn g_is_continuous_at_the_first_upper_boundary() {
    let cfg = configs()[3];
    let seq = cfg.boundaries();
    let b1 = seq.upper(1);
    for big_n in 3..=5 {
        if !(b1 >= seq.lower(big_n - 1) && b1 <= seq.upper(big_n)) {
            continue;
        }
        for n in 0..=big_n - 2 {
            let at = g_term(n, b1, None, 0.5, big_n, &seq).unwrap();
            let above = g_term(n, b1 * (1.0 + 1e-12), None, 0.5, big_n, &seq).unwrap();
            assert!(rel_diff(above, at) < 1e-9, "n = {n}, N = {big_n}: {at} vs {above}");
        }
    }
}

#[test]
fn g_with_distant_upper_limit_approaches_the_open_form() {
    let cfg = configs()[0];
    let seq = cfg.boundaries();
    let c = seq.lower(4) + 0.5;
    for n in 0..=2 {
        let open = g_term(n, c, None, 0.5, 4, &seq).unwrap();
        let far = g_term(n, c, Some(c + 200.0), 0.5, 4, &seq).unwrap();
        assert!(rel_diff(far, open) < 1e-12, "n = {n}: {far} vs {open}");
    }
}

#[test]
fn null_continuation_probabilities_are_nested() {
    let cfg = SsctConfig::new(-35.32, 35.32, -5.69, 2.316, 140, 10f64.powf(-0.5), 1.0).unwrap();
    let seq = cfg.boundaries();
    let mut prev = 1.0;
    for n in 1..40 {
        let p = j_band(n, 0.5, &seq).unwrap() * 0.5f64.powi(n as i32);
        assert!((0.0..=1.0).contains(&p), "N = {n}: {p}");
        assert!(p <= prev + 1e-12, "N = {n}: {p} after {prev}");
        prev = p;
    }
    let m = 30;
    let cfg = cfg.with_m(m).unwrap();
    let seq = cfg.boundaries();
    let p = j_upper(m, seq.gamma_bar_m(), 0.5, &seq).unwrap() * 0.5f64.powi(m as i32);
    assert!((0.0..=1.0).contains(&p), "{p}");
}

#[test]
fn nested_quadrature_of_the_lemma_example() {
    // f^(3) on knots [0, 1, 2] at 3: ∫_2^3 ∫_1^{x3} ∫_0^{x2} dx1 dx2 dx3
    let p = poly_build(&[0.0, 1.0, 2.0]).unwrap();
    let gl = gauss_quad::GaussLegendre::new(std::num::NonZeroUsize::new(6).unwrap());
    let want = gl.integrate(2.0, 3.0, |x3| gl.integrate(1.0, x3, |x2| x2));
    assert!(rel_diff(p.eval(3.0), want) < 1e-8, "{} vs {want}", p.eval(3.0));
}

fn knots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..5.0f64, 1..7).prop_map(|mut v| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    })
}

proptest! {
    #[test]
    fn derivative_drops_one_order(k in knots(), dx in 0.1..3.0f64) {
        let p = PolyIntegral::<f64>::build(&k).unwrap();
        let q = PolyIntegral::<f64>::build(&k[..k.len() - 1]).unwrap();
        let xi = k[k.len() - 1] + dx;
        let h = 1e-4;
        let fd = (p.eval(xi + h) - p.eval(xi - h)) / (2.0 * h);
        // polynomial of degree <= 6: the central difference is accurate to h²·|f'''|
        prop_assert!((fd - q.eval(xi)).abs() <= 1e-6 * q.eval(xi).abs().max(1.0), "{} vs {}", fd, q.eval(xi));
    }

    #[test]
    fn scaling(k in knots(), dx in 0.0..3.0f64, t in 0.01..10.0f64) {
        let p = poly_build(&k).unwrap();
        let scaled: Vec<f64> = k.iter().map(|x| t * x).collect();
        let ps = poly_build(&scaled).unwrap();
        let xi = k[k.len() - 1] + dx;
        let want = t.powi(k.len() as i32) * p.eval(xi);
        let got = ps.eval(t * xi);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-300) + 1e-14, "{} vs {}", got, want);
    }

    #[test]
    fn shift(k in knots(), dx in 0.0..3.0f64, frac in 0.0..1.0f64) {
        let delta = frac * k[0];
        let p = poly_build(&k).unwrap();
        let shifted: Vec<f64> = k.iter().map(|x| x - delta).collect();
        let ps = poly_build(&shifted).unwrap();
        let xi = k[k.len() - 1] + dx;
        let want = p.eval(xi);
        let got = ps.eval(xi - delta);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn equal_knots_give_a_power(chi in 0.0..4.0f64, k in 1usize..8, dx in 0.0..3.0f64) {
        let p = poly_build(&vec![chi; k]).unwrap();
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        let want = dx.powi(k as i32) / fact;
        prop_assert!((p.eval(chi + dx) - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert_eq!(p.coefficients()[0], 1.0);
        prop_assert!(p.coefficients()[1..].iter().all(|c| *c == 0.0));
    }
}
