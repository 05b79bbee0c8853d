use privtree::dp::Noiseless;
use privtree::rng::stream;
use privtree::svt::*;

fn lap_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 { 0.5 * (x / b).exp() } else { 1.0 - 0.5 * (-x / b).exp() }
}

fn lap_pdf(x: f64, b: f64) -> f64 {
    (-(x.abs()) / b).exp() / (2.0 * b)
}

/// Composite Simpson over a wide window with a fine grid, no logs, no
/// adaptivity; only usable when probabilities are not tiny.
fn simpson_event_probability(answers: &[f64], event: &[SvtOutput], theta: f64, s_t: f64, s_q: f64) -> f64 {
    let f = |x: f64| {
        let mut v = lap_pdf(x - theta, s_t);
        for (&q, &o) in answers.iter().zip(event) {
            v *= match o {
                SvtOutput::One => 1.0 - lap_cdf(x - q, s_q),
                _ => lap_cdf(x - q, s_q),
            };
        }
        v
    };
    let (a, b, n) = (theta - 60.0 * s_t, theta + 60.0 * s_t, 2_000_000);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn binary_violation_bound() {
    let r = binary_svt_log_ratio(16, 1.0, 2.0).unwrap();
    assert!(r > 4.0, "{r}");
    for lambda in [1.0, 2.0, 4.0] {
        let mut prev = f64::NEG_INFINITY;
        for k in [4, 8, 16, 32] {
            let r = binary_svt_log_ratio(k, 1.0, lambda).unwrap();
            assert!(r > k as f64 / (2.0 * lambda), "k={k} lambda={lambda}: {r}");
            assert!(r > prev);
            prev = r;
        }
    }
    // at lambda = k / (4 eps) the ratio exceeds 2 eps
    let (k, eps) = (16usize, 0.5);
    assert!(binary_svt_log_ratio(k, 1.0, k as f64 / (4.0 * eps)).unwrap() > 2.0 * eps);
    assert!(binary_svt_log_ratio(3, 1.0, 2.0).is_err());
    assert!(binary_svt_log_ratio(0, 1.0, 2.0).is_err());
}

#[test]
fn binary_ratio_matches_simpson_oracle() {
    let s = binary_scenario(4, 1.0).unwrap();
    let a = s.answers();
    let cfg = SvtConfig::new(1.0, 2.0, 1).unwrap();
    for d in [&a[0], &a[2]] {
        let exact = log_event_probability(SvtVariant::Binary, d, &s.event, &cfg).unwrap().exp();
        let oracle = simpson_event_probability(d, &s.event, 1.0, 2.0, 2.0);
        assert!((exact / oracle - 1.0).abs() < 1e-8, "{exact} vs {oracle}");
    }
}

#[test]
fn improved_probability_matches_simpson_oracle() {
    use SvtOutput::*;
    let cfg = SvtConfig::new(0.5, 1.5, 2).unwrap();
    let answers = [1.0, 0.0, 2.0, 1.0];
    for event in enumerate_events(4, 2) {
        let exact = log_event_probability(SvtVariant::Improved, &answers, &event, &cfg).unwrap().exp();
        let oracle = simpson_event_probability(&answers, &event, 0.5, 1.5, 3.0);
        assert!((exact / oracle - 1.0).abs() < 1e-7, "{event:?}: {exact} vs {oracle}");
    }
    // probabilities of all events sum to one
    let total: f64 = enumerate_events(4, 2)
        .iter()
        .map(|e| log_event_probability(SvtVariant::Improved, &answers, e, &cfg).unwrap().exp())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
    let _ = One;
}

#[test]
fn reduced_probabilities_sum_to_one() {
    let cfg = SvtConfig::new(1.0, 1.0, 3).unwrap();
    let answers = [2.0, 0.0, 1.0, 3.0, 1.0];
    let total: f64 = enumerate_events(5, 3)
        .iter()
        .map(|e| log_event_probability(SvtVariant::Reduced, &answers, e, &cfg).unwrap().exp())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}

#[test]
fn vanilla_closed_form_and_quadrature() {
    assert_eq!(vanilla_svt_log_ratio(4, 2.0).unwrap(), 2.0);
    let q = vanilla_svt_log_ratio_quadrature(4, 2.0).unwrap();
    assert!((q - 2.0).abs() < 1e-8, "{q}");
    let q = vanilla_svt_log_ratio_quadrature(8, 3.0).unwrap();
    assert!((q - vanilla_svt_log_ratio(8, 3.0).unwrap()).abs() < 1e-8, "{q}");
    assert!(vanilla_svt_log_ratio(0, 2.0).is_err());
    assert!(vanilla_svt_log_ratio(3, -1.0).is_err());
}

#[test]
fn improved_battery_respects_bound() {
    for lambda in [1.0, 2.0, 4.0] {
        let battery = halting_battery(6, &[1, 2, 3], &[0.0, 1.0], 10, 7).unwrap();
        let (r, worst) = battery_max_log_ratio(SvtVariant::Improved, &battery, lambda).unwrap();
        assert!(r <= 2.0 / lambda + AUDIT_TOLERANCE, "lambda {lambda}: {r} at {worst}");
        assert!(r > 0.0);
        let (r, worst) = battery_max_log_ratio(SvtVariant::Reduced, &battery, lambda).unwrap();
        assert!(r <= 2.0 / lambda + AUDIT_TOLERANCE, "reduced lambda {lambda}: {r} at {worst}");
    }
}

#[test]
fn counterexample_chain_under_improved_variant() {
    let base = binary_scenario(16, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for event in enumerate_events(16, 1) {
        let s = AuditScenario { event, ..base.clone() };
        worst = worst.max(improved_svt_log_ratio_bound(&s, 2.0, 1).unwrap());
    }
    assert!(worst <= 1.0 + AUDIT_TOLERANCE, "{worst}");
}

#[test]
fn identical_datasets_give_zero() {
    let s = AuditScenario {
        name: "same".into(),
        datasets: vec![vec!['a', 'b', 'b'], vec!['b', 'a', 'b']],
        queries: vec![CountQuery::of('a'), CountQuery::of('b'), CountQuery::of('a')],
        theta: 1.0,
        event: vec![SvtOutput::Zero, SvtOutput::One],
    };
    assert_eq!(improved_svt_log_ratio_bound(&s, 2.0, 1).unwrap(), 0.0);
}

#[test]
fn scenario_validation() {
    let mut s = binary_scenario(4, 1.0).unwrap();
    s.datasets = vec![vec!['a', 'b'], vec!['b', 'b']];
    assert!(s.validate().is_err());
    let mut s = binary_scenario(4, 1.0).unwrap();
    s.queries[0] = CountQuery { labels: vec!['a', 'a'] };
    s.validate().unwrap();
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let cfg = SvtConfig::new(1.0, 2.0, 1).unwrap();
    let s = binary_scenario(2, 1.0).unwrap();
    let d1 = &s.answers()[0];
    let exact = log_event_probability(SvtVariant::Binary, d1, &s.event, &cfg).unwrap().exp();
    let (p, se) = monte_carlo_event_probability(SvtVariant::Binary, d1, &s.event, &cfg, 1_000_000, 11).unwrap();
    assert!(exact >= 1e-4);
    assert!((p - exact).abs() <= 3.0 * se, "{p} ± {se} vs {exact}");

    let cfg = SvtConfig::new(0.0, 1.0, 2).unwrap();
    let answers = [1.0, 0.0, 2.0];
    let event = vec![SvtOutput::Zero, SvtOutput::One, SvtOutput::Zero];
    let exact = log_event_probability(SvtVariant::Reduced, &answers, &event, &cfg).unwrap().exp();
    let (p, se) = monte_carlo_event_probability(SvtVariant::Reduced, &answers, &event, &cfg, 500_000, 12).unwrap();
    assert!((p - exact).abs() <= 3.0 * se, "{p} ± {se} vs {exact}");
}

#[test]
fn default_audit_verdicts() {
    let report = default_audit().unwrap();
    let verdict = |v: SvtVariant| report.iter().find(|e| e.variant == v).unwrap().verdict;
    assert_eq!(verdict(SvtVariant::Binary), Verdict::Violates);
    assert_eq!(verdict(SvtVariant::Vanilla), Verdict::Violates);
    assert_eq!(verdict(SvtVariant::Improved), Verdict::Satisfies);
    assert_eq!(verdict(SvtVariant::Reduced), Verdict::Satisfies);
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"VIOLATES\"") && json.contains("\"claimed_bound\""));
    assert!(render_audit_table(&report).lines().count() == 5);
}

#[test]
fn mechanisms_are_seed_reproducible_and_count_draws() {
    let answers: Vec<f64> = (0..50).map(|i| (i % 5) as f64).collect();
    let cfg = SvtConfig::new(2.0, 1.0, 4).unwrap();
    let a = binary_svt(&answers, 2.0, 1.0, &mut stream(3)).unwrap();
    let b = binary_svt(&answers, 2.0, 1.0, &mut stream(3)).unwrap();
    assert_eq!(a, b);
    let r = reduced_svt(&answers, &cfg, &mut stream(4)).unwrap();
    let ones = r.outputs.iter().filter(|o| **o == SvtOutput::One).count();
    // the threshold is redrawn after every 1 except the halting one
    assert_eq!(r.threshold_draws, 1 + ones - usize::from(ones == cfg.t));
    let i = improved_svt(&answers, &cfg, &mut stream(4)).unwrap();
    assert_eq!(i.threshold_draws, 1);
    assert!(i.outputs.iter().filter(|o| **o == SvtOutput::One).count() <= cfg.t);
    let v = vanilla_svt(&answers, &SvtConfig::new(0.0, 1.0, 1).unwrap(), &mut Noiseless).unwrap();
    assert_eq!(v.outputs.len(), 2);
}
