//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs with `cargo test --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use privtree::dp::{draw_laplace, rho, rho_upper, Noiseless, PrivacyParams};
use privtree::eval::*;
use privtree::markov::*;
use privtree::par;
use privtree::rng::{stream, substream};
use privtree::spatial::*;
use privtree::svt::*;
use rand::Rng;

mod common;
use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rho_bound() -> Outcome {
    let pairs = [(0.0, 1.0), (0.0, 2.5), (5.0, 0.5), (-3.0, 4.0), (10.0, 7.0 / 3.0), (1.0, 10.0)];
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for (theta, lambda) in pairs {
        let (lo, hi) = (theta - 10.0 * lambda, theta + 40.0 * lambda);
        for i in 0..1000 {
            let x = lo + (hi - lo) * i as f64 / 999.0;
            let gap = rho(x, theta, lambda) - rho_upper(x, theta, lambda);
            worst = worst.max(gap);
            violations += usize::from(gap > 0.0);
        }
    }
    ensure!(violations == 0, "{violations} grid points with rho > rho_upper");
    Ok(format!("6000 points, max(rho - rho_upper) = {worst:.3e}"))
}

fn split_probability() -> Outcome {
    let lambda = 2.5;
    let mut parts = Vec::new();
    for (i, beta) in [2u32, 4, 16].into_iter().enumerate() {
        let cut = lambda * f64::from(beta).ln();
        let hits = par::map_indices(16, |c| {
            let mut rng = substream(2, (i * 16 + c) as u64);
            (0..62_500).filter(|_| draw_laplace(&mut rng, lambda) > cut).count()
        });
        let p = hits.iter().sum::<usize>() as f64 / 1e6;
        let want = 1.0 / (2.0 * f64::from(beta));
        ensure!((p - want).abs() <= 0.005, "beta {beta}: {p} vs {want}");
        parts.push(format!("beta {beta}: {p:.4} (target {want:.4})"));
    }
    Ok(parts.join(", "))
}

fn convergence() -> Outcome {
    let dom = SpatialDomain::unit(2);
    let data = gaussian_mixture(10_000, &dom, 3, 2024).map_err(|e| e.to_string())?;
    let pts: Vec<Vec<f64>> = data.points().map(<[f64]>::to_vec).collect();
    let (eps, theta) = (1.0, 600.0);
    let params = PrivacyParams::privtree(eps, 4, theta).map_err(|e| e.to_string())?;
    let opts = BuildOptions::default();
    // reference tree: no noise and no bias, split while the count exceeds θ
    let mut cells = Vec::new();
    oracle_cells(&pts, vec![0.0; 2], vec![1.0; 2], 0, &|c, d| d < opts.depth_cap && c as f64 > theta, &mut cells);
    let t_star = cells.len() as f64;
    let biased = build_privtree(&data, &params, &opts, &mut Noiseless).map_err(|e| e.to_string())?.len();
    let sizes = par::map_indices(500, |i| {
        build_privtree(&data, &params, &opts, &mut substream(3, i as u64)).map(|t| t.len() as f64)
    });
    let sizes = sizes.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let m = mean(&sizes);
    let sd = (sizes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (sizes.len() - 1) as f64).sqrt();
    let se = sd / (sizes.len() as f64).sqrt();
    ensure!((40.0..=90.0).contains(&t_star), "|T*| = {t_star} is not near 60");
    ensure!(m <= 2.0 * t_star + 3.0 * se, "mean |T| = {m:.1} > 2|T*| + 3SE = {:.1}", 2.0 * t_star + 3.0 * se);
    Ok(format!(
        "|T*| = {t_star}, mean |T| = {m:.1} (SE {se:.2}) <= {:.1}; biased noiseless tree has {biased} nodes",
        2.0 * t_star + 3.0 * se
    ))
}

fn dp_audit() -> Outcome {
    let dom = SpatialDomain::unit(1);
    let mut pts: Vec<Vec<f64>> = (0..6).map(|i| vec![0.05 + 0.01 * i as f64]).collect();
    pts.extend((0..3).map(|i| vec![0.6 + 0.01 * i as f64]));
    let d1 = SpatialDataset::new(dom.clone(), pts).map_err(|e| e.to_string())?;
    let d2 = d1.with_point(&[0.05]).map_err(|e| e.to_string())?;
    let params = PrivacyParams::privtree(1.0, 2, 0.0).map_err(|e| e.to_string())?;
    ensure!((params.lambda - 3.0).abs() < 1e-12, "lambda = {}", params.lambda);
    let opts = BuildOptions { depth_cap: 3, split: SplitRule::AllDims };
    let runs = 1_000_000;
    let chunks = 64;
    let count = |data: &SpatialDataset, salt: u64| -> Result<HashMap<Vec<bool>, u64>, String> {
        let parts = par::map_indices(chunks, |c| {
            let mut rng = substream(salt, c as u64);
            let mut h: HashMap<Vec<bool>, u64> = HashMap::new();
            for _ in 0..runs / chunks {
                let t = build_privtree(data, &params, &opts, &mut rng).map_err(|e| e.to_string())?;
                *h.entry(t.split_signature()).or_default() += 1;
            }
            Ok::<_, String>(h)
        });
        let mut total = HashMap::new();
        for p in parts {
            for (k, v) in p? {
                *total.entry(k).or_default() += v;
            }
        }
        Ok(total)
    };
    let (h1, h2) = (count(&d1, 40)?, count(&d2, 41)?);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for shape in h1.keys().chain(h2.keys()) {
        let (c1, c2) = (h1.get(shape).copied().unwrap_or(0), h2.get(shape).copied().unwrap_or(0));
        if c1.max(c2) < 1000 {
            continue;
        }
        ensure!(c1 > 0 && c2 > 0, "shape {shape:?} seen {c1} vs {c2} times");
        let lr = (c1 as f64 / c2 as f64).ln().abs();
        let se = (1.0 / c1 as f64 + 1.0 / c2 as f64).sqrt();
        ensure!(lr <= params.epsilon + 3.0 * se, "shape {shape:?}: |log ratio| {lr:.4} > 1 + 3SE");
        worst = worst.max(lr);
        checked += 1;
    }
    ensure!(checked >= 2, "only {checked} shapes had enough occurrences");
    Ok(format!("{checked} frequent shape pairs, max |log ratio| = {worst:.4} (epsilon = 1)"))
}

fn noiseless_equivalence() -> Outcome {
    for seed in 0..50 {
        let (data, pts) = random_dataset(seed);
        let params = PrivacyParams::privtree(0.5 + (seed % 4) as f64 * 0.5, 4, 0.0).map_err(|e| e.to_string())?;
        let opts = BuildOptions { depth_cap: 12, ..Default::default() };
        let tree = build_privtree(&data, &params, &opts, &mut Noiseless).map_err(|e| e.to_string())?;
        let (theta, delta) = (params.theta, params.delta);
        let mut cells = Vec::new();
        let rule = |c: usize, d: u32| d < 12 && (theta - delta).max(c as f64 - f64::from(d) * delta) > theta;
        oracle_cells(&pts, vec![0.0; 2], vec![1.0; 2], 0, &rule, &mut cells);
        ensure!(tree.cells() == sorted(cells), "privtree differs from oracle on dataset {seed}");

        let (h, theta) = (1 + (seed % 6) as u32, (seed % 3) as f64 * 5.0);
        let simple = build_simple_tree(&data, 1.0, theta, h, SplitRule::AllDims, &mut Noiseless).map_err(|e| e.to_string())?;
        let mut cells = Vec::new();
        oracle_cells(&pts, vec![0.0; 2], vec![1.0; 2], 0, &|c, d| c as f64 > theta && d + 1 < h, &mut cells);
        ensure!(simple.cells() == sorted(cells), "simple tree differs from oracle on dataset {seed}");
    }
    Ok("50 datasets, both builders identical to brute-force recursion".into())
}

fn range_exactness() -> Outcome {
    let data = gaussian_mixture(5000, &SpatialDomain::unit(2), 4, 6).map_err(|e| e.to_string())?;
    let params = PrivacyParams::privtree(1.0, 4, 3.0).map_err(|e| e.to_string())?;
    let tree = build_privtree(&data, &params, &BuildOptions::default(), &mut Noiseless).map_err(|e| e.to_string())?;
    let tree = attach_noisy_counts(tree, &data, 1.0, &mut Noiseless).map_err(|e| e.to_string())?;
    let mut rng = stream(6);
    let mut queries: Vec<RangeQuery> = (0..500)
        .map(|_| {
            let r = &tree.node(rng.random_range(0..tree.len())).region;
            RangeQuery { lo: r.lo.clone(), hi: r.hi.clone() }
        })
        .collect();
    queries.push(RangeQuery::whole(data.domain()));
    for q in &queries {
        let est = range_count(&tree, q).map_err(|e| e.to_string())?;
        let exact = exact_range_count(&data, q).map_err(|e| e.to_string())? as f64;
        ensure!(est == exact, "aligned query {q:?}: {est} vs {exact}");
    }
    let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.05 + 0.09 * i as f64, 0.5]).collect();
    let fixture = SpatialDataset::new(SpatialDomain::unit(2), pts).map_err(|e| e.to_string())?;
    let leaf = build_simple_tree(&fixture, 1.0, 0.0, 1, SplitRule::AllDims, &mut Noiseless).map_err(|e| e.to_string())?;
    let half = range_count(&leaf, &RangeQuery { lo: vec![0.0, 0.0], hi: vec![0.5, 1.0] }).map_err(|e| e.to_string())?;
    ensure!(half == 5.0, "half-leaf estimate {half}");
    Ok(format!("{} aligned queries exact, half-leaf estimate {half}", queries.len()))
}

fn pst_worked_example() -> Outcome {
    let raw = vec![vec!["A", "B"], vec!["B"], vec!["A", "A", "B"], vec!["A", "A", "A", "B"]];
    let data = SequenceDataset::from_tokens(&raw, 10).map_err(|e| e.to_string())?;
    let pst = build_private_pst(&data, 1.0, &PstOptions::default(), &mut Noiseless).map_err(|e| e.to_string())?;
    let a = data.alphabet.id("A").expect("A");
    let b = data.alphabet.id("B").expect("B");
    let root_a = pst.hist(pst.root()).expect("histograms")[a as usize];
    let ab = estimate_string_count(&pst, &[a, b]).map_err(|e| e.to_string())?;
    ensure!(root_a == 6.0, "hist(root)[A] = {root_a}");
    ensure!(ab == 3.0, "estimate(AB) = {ab}");
    Ok(format!("hist(root)[A] = {root_a}, estimate(AB) = {ab}"))
}

fn score_monotonicity() -> Outcome {
    let results = par::map_indices(1000, |seed| {
        let mut rng = substream(8, seed as u64);
        let sigma = rng.random_range(1..=4usize);
        let alphabet = Alphabet::new((0..sigma).map(|i| format!("s{i}"))).expect("alphabet");
        let l_max = rng.random_range(1..=8);
        let raw = (0..rng.random_range(1..40))
            .map(|_| (0..rng.random_range(0..12)).map(|_| rng.random_range(2..2 + sigma as Symbol)).collect())
            .collect();
        let data = truncate_sequences(alphabet, raw, l_max).expect("dataset");
        let pst = build_exact_pst(&data, l_max);
        let edges = pst.edges().count();
        let bad = pst
            .edges()
            .filter(|&(p, c)| pst_score(pst.hist(c).expect("hist")) > pst_score(pst.hist(p).expect("hist")))
            .count();
        (edges, bad)
    });
    let edges: usize = results.iter().map(|r| r.0).sum();
    let bad: usize = results.iter().map(|r| r.1).sum();
    ensure!(bad == 0, "{bad} parent-child violations");
    Ok(format!("1000 trees, {edges} parent-child pairs, 0 violations"))
}

fn svt_audit() -> Outcome {
    let binary = binary_svt_log_ratio(16, 1.0, 2.0).map_err(|e| e.to_string())?;
    ensure!(binary > 4.0, "binary log ratio {binary} <= 4");
    let closed = vanilla_svt_log_ratio(4, 2.0).map_err(|e| e.to_string())?;
    let quad = vanilla_svt_log_ratio_quadrature(4, 2.0).map_err(|e| e.to_string())?;
    ensure!((closed - 2.0).abs() <= 1e-8 && (quad - 2.0).abs() <= 1e-8, "vanilla {closed} / {quad}");
    let lambda = 2.0;
    let battery = halting_battery(8, &[1, 2, 3], &[0.0, 1.0], 20, 9).map_err(|e| e.to_string())?;
    let (improved, worst) = battery_max_log_ratio(SvtVariant::Improved, &battery, lambda).map_err(|e| e.to_string())?;
    ensure!(improved <= 2.0 / lambda + 1e-8, "improved battery max {improved} at {worst}");

    let cfg = SvtConfig::new(1.0, 2.0, 1).map_err(|e| e.to_string())?;
    let s = binary_scenario(2, 1.0).map_err(|e| e.to_string())?;
    let answers = &s.answers()[0];
    let exact = log_event_probability(SvtVariant::Binary, answers, &s.event, &cfg).map_err(|e| e.to_string())?.exp();
    let (p, se) = monte_carlo_event_probability(SvtVariant::Binary, answers, &s.event, &cfg, 10_000_000, 10)
        .map_err(|e| e.to_string())?;
    ensure!((p - exact).abs() <= 3.0 * se, "Monte Carlo {p} ± {se} vs quadrature {exact}");
    Ok(format!(
        "binary {binary:.4} > 4, vanilla {quad:.10}, improved max {improved:.4} <= 1 over {} scenarios, MC {p:.5} vs {exact:.5}",
        battery.len()
    ))
}

fn directional_utility() -> Outcome {
    let dom = SpatialDomain::unit(2);
    let data = gaussian_mixture(200_000, &dom, 8, 10).map_err(|e| e.to_string())?;
    let start = Instant::now();
    release_privtree(&data, 1.0, 0.0, 0.5, &BuildOptions::default(), &mut stream(10)).map_err(|e| e.to_string())?;
    let build = start.elapsed();
    ensure!(build < Duration::from_secs(5), "PrivTree build took {build:?}");
    let queries = gen_workload(&dom, &WorkloadSpec { size_class: SizeClass::Medium, count: 1000, seed: 10 });
    let plan = TrialPlan {
        methods: vec![Method::PrivTree { tree_share: 0.5 }, Method::Ug],
        epsilon: 1.0,
        trials: 20,
        seed: 10,
        delta: default_delta(data.len()),
    };
    let report = run_trials(&data, &queries, &plan).map_err(|e| e.to_string())?;
    let c = &report.comparisons[0];
    ensure!(c.wins >= 15, "PrivTree beat UG in only {}/{} trials", c.wins, c.trials);
    Ok(format!(
        "PrivTree wins {}/{} (median RE {:.4} vs {:.4}), build {:.2}s",
        c.wins, c.trials, report.methods[0].median_re, report.methods[1].median_re, build.as_secs_f64()
    ))
}

fn generation_fidelity() -> Outcome {
    // source: first-order chain over three symbols with symbol-dependent
    // stopping, truncated at l_max = 12
    let mut rng = stream(11);
    let alphabet = Alphabet::new(["A", "B", "C"]).map_err(|e| e.to_string())?;
    let stop = [0.1, 0.25, 0.4];
    let raw: Vec<Vec<Symbol>> = (0..20_000)
        .map(|_| {
            let mut s = Vec::new();
            let mut cur = rng.random_range(0..3usize);
            loop {
                s.push(2 + cur as Symbol);
                if rng.random::<f64>() < stop[cur] || s.len() > 20 {
                    break s;
                }
                cur = (cur + rng.random_range(1..3)) % 3;
            }
        })
        .collect();
    let data = truncate_sequences(alphabet, raw, 12).map_err(|e| e.to_string())?;
    let pst = build_private_pst(&data, 1.0, &PstOptions::default(), &mut Noiseless).map_err(|e| e.to_string())?;
    let synth = generate_sequences(&pst, 100_000, &mut stream(12)).map_err(|e| e.to_string())?;
    let p = empirical_distribution(data.sequences.iter().map(Sequence::len_with_end));
    let q = empirical_distribution(synth.iter().map(Sequence::len_with_end));
    let tv = total_variation(&p, &q).map_err(|e| e.to_string())?;
    ensure!(tv <= 0.02, "total variation {tv}");
    Ok(format!("TV = {tv:.4} over {} generated sequences, PST with {} nodes", synth.len(), pst.len()))
}

type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("rho bound", rho_bound, Some(1)),
        ("split probability", split_probability, Some(5)),
        ("convergence", convergence, Some(30)),
        ("empirical DP audit", dp_audit, Some(120)),
        ("noiseless oracle equivalence", noiseless_equivalence, None),
        ("range-count exactness", range_exactness, None),
        ("PST worked example", pst_worked_example, None),
        ("score monotonicity", score_monotonicity, None),
        ("SVT audit", svt_audit, Some(30)),
        ("directional utility", directional_utility, Some(180)),
        ("generation fidelity", generation_fidelity, None),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(s)) if took > Duration::from_secs(s) => Err(format!("took {took:.2?}, limit {s}s")),
            (o, _) => o,
        };
        let limit = limit.map_or(String::new(), |s| format!(", limit {s}s"));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{took:.2?}{limit}]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{took:.2?}{limit}]: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
