use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mechanism::{binary_svt, evaluate, improved_svt, reduced_svt, vanilla_svt, CountQuery, SvtConfig, SvtOutput};
use super::quadrature::{integrate, QuadOptions};
use crate::dp::{laplace_log_cdf, laplace_log_pdf, laplace_log_sf};
use crate::rng::substream;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvtVariant {
    Binary,
    Vanilla,
    Reduced,
    Improved,
}

impl SvtVariant {
    pub const ALL: [SvtVariant; 4] = [SvtVariant::Binary, SvtVariant::Vanilla, SvtVariant::Reduced, SvtVariant::Improved];

    pub fn name(self) -> &'static str {
        match self {
            SvtVariant::Binary => "binary",
            SvtVariant::Vanilla => "vanilla",
            SvtVariant::Reduced => "reduced",
            SvtVariant::Improved => "improved",
        }
    }

    fn halts(self) -> bool {
        self != SvtVariant::Binary
    }

    /// Noise scales (threshold, answers).
    fn scales(self, cfg: &SvtConfig) -> (f64, f64) {
        let tl = cfg.t as f64 * cfg.lambda;
        match self {
            SvtVariant::Binary => (cfg.lambda, cfg.lambda),
            SvtVariant::Vanilla | SvtVariant::Improved => (cfg.lambda, tl),
            SvtVariant::Reduced => (tl, tl),
        }
    }

    /// Run the mechanism once.
    pub fn run(self, answers: &[f64], cfg: &SvtConfig, rng: &mut impl rand::RngCore) -> Result<Vec<SvtOutput>> {
        let run = match self {
            SvtVariant::Binary => binary_svt(answers, cfg.threshold, cfg.lambda, rng)?,
            SvtVariant::Vanilla => vanilla_svt(answers, cfg, rng)?,
            SvtVariant::Reduced => reduced_svt(answers, cfg, rng)?,
            SvtVariant::Improved => improved_svt(answers, cfg, rng)?,
        };
        Ok(run.outputs)
    }
}

impl fmt::Display for SvtVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SvtVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SvtVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::param(format!("unknown SVT variant {s:?} (expected binary, vanilla, reduced or improved)")))
    }
}

/// Check that `event` is an output sequence the variant can produce on a
/// stream of `len` queries.
fn check_event(variant: SvtVariant, len: usize, event: &[SvtOutput], t: usize) -> Result<()> {
    let numeric = variant == SvtVariant::Vanilla;
    for o in event {
        let ok = match o {
            SvtOutput::One | SvtOutput::Zero => !numeric,
            SvtOutput::Bottom => numeric,
            SvtOutput::Value(v) => numeric && v.is_finite(),
        };
        if !ok {
            return Err(Error::param(format!("output {o:?} cannot come from the {variant} variant")));
        }
    }
    let positives = event.iter().filter(|o| o.is_positive()).count();
    let complete = if variant.halts() && positives >= t {
        positives == t && event.last().is_some_and(|o| o.is_positive())
    } else {
        event.len() == len
    };
    if !complete || event.len() > len {
        return Err(Error::param(format!("{variant} cannot produce a {}-output event on {len} queries with t = {t}", event.len())));
    }
    Ok(())
}

/// Log of ∫ pdf_T(x − θ) ∏ sf_Q(x − q) over `above` ∏ cdf_Q(x − q) over
/// `below` dx, for x < `upper`. Multiplicities are folded into the counts.
fn segment_log_integral(
    theta: f64,
    (s_t, s_q): (f64, f64),
    above: &BTreeMap<OrdF64, usize>,
    below: &BTreeMap<OrdF64, usize>,
    upper: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    let above: Vec<(f64, f64)> = above.iter().map(|(q, &n)| (q.0, n as f64)).collect();
    let below: Vec<(f64, f64)> = below.iter().map(|(q, &n)| (q.0, n as f64)).collect();
    let log_g = |x: f64| {
        let mut v = laplace_log_pdf(x - theta, s_t);
        for &(q, n) in &above {
            v += n * laplace_log_sf(x - q, s_q);
        }
        for &(q, n) in &below {
            v += n * laplace_log_cdf(x - q, s_q);
        }
        v
    };
    let mut breaks: Vec<f64> = above.iter().chain(&below).map(|&(q, _)| q).collect();
    breaks.push(theta);
    if upper.is_finite() {
        breaks.push(upper);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (lo, hi) = (breaks[0] - 20.0 * s_t.max(s_q), breaks[breaks.len() - 1] + 20.0 * s_t.max(s_q));
    let shift = breaks
        .iter()
        .copied()
        .chain((0..=256).map(|i| lo + (hi - lo) * i as f64 / 256.0))
        .filter(|&x| x <= upper)
        .map(log_g)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Numeric("event integrand vanishes on every probe point".into()));
    }
    let q = integrate(|x| (log_g(x) - shift).exp(), f64::NEG_INFINITY, upper, &breaks, s_t, opts)?;
    if !(q.value > 0.0) {
        return Err(Error::Numeric(format!("event probability underflowed (scaled integral {:e})", q.value)));
    }
    Ok(q.value.ln() + shift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Natural log of the probability (a density for vanilla's numeric outputs)
/// that the variant run on a stream with true `answers` produces exactly
/// `event`, computed by quadrature over the noisy threshold.
pub fn log_event_probability(variant: SvtVariant, answers: &[f64], event: &[SvtOutput], cfg: &SvtConfig) -> Result<f64> {
    check_event(variant, answers.len(), event, cfg.t)?;
    let scales = variant.scales(cfg);
    let opts = QuadOptions::default();
    let mut total = 0.0;
    let mut above = BTreeMap::new();
    let mut below = BTreeMap::new();
    let mut upper = f64::INFINITY;
    let mut density = 0.0;
    for (i, (&q, &o)) in answers.iter().zip(event).enumerate() {
        match o {
            SvtOutput::One => *above.entry(OrdF64(q)).or_insert(0) += 1,
            SvtOutput::Zero | SvtOutput::Bottom => *below.entry(OrdF64(q)).or_insert(0) += 1,
            SvtOutput::Value(v) => {
                upper = upper.min(v);
                density += laplace_log_pdf(v - q, scales.1);
            }
        }
        let segment_ends = variant == SvtVariant::Reduced && o == SvtOutput::One || i + 1 == event.len();
        if segment_ends {
            total += segment_log_integral(cfg.threshold, scales, &above, &below, upper, &opts)?;
            above.clear();
            below.clear();
        }
    }
    if event.is_empty() {
        total = 0.0;
    }
    Ok(total + density)
}

/// Natural log of Pr[D → E] / Pr[D′ → E] for the stream answers on two
/// datasets.
pub fn log_ratio(variant: SvtVariant, d: &[f64], d_prime: &[f64], event: &[SvtOutput], cfg: &SvtConfig) -> Result<f64> {
    if d.len() != d_prime.len() {
        return Err(Error::param("answer streams differ in length"));
    }
    Ok(log_event_probability(variant, d, event, cfg)? - log_event_probability(variant, d_prime, event, cfg)?)
}

/// A chain of datasets (consecutive ones are neighbors), a query stream
/// and an output event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditScenario {
    pub name: String,
    pub datasets: Vec<Vec<char>>,
    pub queries: Vec<CountQuery>,
    pub theta: f64,
    pub event: Vec<SvtOutput>,
}

fn neighbors(a: &[char], b: &[char]) -> bool {
    let (small, big) = if a.len() < b.len() { (a, b) } else { (b, a) };
    if big.len() != small.len() + 1 {
        return false;
    }
    let mut left: Vec<char> = big.to_vec();
    for c in small {
        match left.iter().position(|x| x == c) {
            Some(i) => {
                left.swap_remove(i);
            }
            None => return false,
        }
    }
    true
}

impl AuditScenario {
    /// Rejects chains whose consecutive datasets are not one insertion
    /// apart. Identical datasets are accepted as a degenerate pair.
    pub fn validate(&self) -> Result<()> {
        if self.datasets.len() < 2 {
            return Err(Error::param(format!("scenario {} needs at least two datasets", self.name)));
        }
        for w in self.datasets.windows(2) {
            let same = {
                let (mut a, mut b) = (w[0].clone(), w[1].clone());
                a.sort_unstable();
                b.sort_unstable();
                a == b
            };
            if !same && !neighbors(&w[0], &w[1]) {
                return Err(Error::param(format!("scenario {}: {:?} and {:?} are not neighbors", self.name, w[0], w[1])));
            }
        }
        for q in &self.queries {
            for w in self.datasets.windows(2) {
                if (q.eval(&w[0]) - q.eval(&w[1])).abs() > 1.0 {
                    return Err(Error::param(format!("scenario {}: query {:?} has sensitivity above 1", self.name, q.labels)));
                }
            }
        }
        Ok(())
    }

    pub fn answers(&self) -> Vec<Vec<f64>> {
        self.datasets.iter().map(|d| evaluate(&self.queries, d)).collect()
    }

    /// Log-ratio between the first and last dataset of the chain.
    pub fn end_to_end_log_ratio(&self, variant: SvtVariant, cfg: &SvtConfig) -> Result<f64> {
        self.validate()?;
        let a = self.answers();
        log_ratio(variant, &a[0], &a[a.len() - 1], &self.event, cfg)
    }

    /// Largest log-ratio over every consecutive neighbor pair, taken in
    /// both directions.
    pub fn max_neighbor_log_ratio(&self, variant: SvtVariant, cfg: &SvtConfig) -> Result<f64> {
        self.validate()?;
        let lp = self
            .answers()
            .iter()
            .map(|a| log_event_probability(variant, a, &self.event, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(lp.windows(2).map(|w| (w[0] - w[1]).abs()).fold(0.0, f64::max))
    }
}

/// Counterexample chain for the binary variant: `{a,b}`, `{a,b,b}`,
/// `{b,b}` with `k/2` copies of the `a`-count followed by `k/2` copies of
/// the `b`-count, and the event "first half 1, second half 0".
pub fn binary_scenario(k: usize, theta: f64) -> Result<AuditScenario> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::param(format!("binary scenario needs an even k >= 2, got {k}")));
    }
    let h = k / 2;
    Ok(AuditScenario {
        name: format!("binary-k{k}"),
        datasets: vec![vec!['a', 'b'], vec!['a', 'b', 'b'], vec!['b', 'b']],
        queries: [vec![CountQuery::of('a'); h], vec![CountQuery::of('b'); h]].concat(),
        theta,
        event: [vec![SvtOutput::One; h], vec![SvtOutput::Zero; h]].concat(),
    })
}

/// `{a,b}`, `{a,a,b}`, `{a,a}` with `k−1` copies of the `a`-count and one
/// `b`-count; the event is ⊥ for the first `k−1` queries and the value 1 for
/// the last.
pub fn vanilla_scenario(k: usize) -> Result<AuditScenario> {
    if k < 1 {
        return Err(Error::param("vanilla scenario needs k >= 1"));
    }
    let mut event = vec![SvtOutput::Bottom; k - 1];
    event.push(SvtOutput::Value(1.0));
    Ok(AuditScenario {
        name: format!("vanilla-k{k}"),
        datasets: vec![vec!['a', 'b'], vec!['a', 'a', 'b'], vec!['a', 'a']],
        queries: [vec![CountQuery::of('a'); k - 1], vec![CountQuery::of('b')]].concat(),
        theta: 0.0,
        event,
    })
}

/// ln(Pr[D₁ → E] / Pr[D₃ → E]) for the binary variant on
/// [`binary_scenario`], by quadrature.
pub fn binary_svt_log_ratio(k: usize, theta: f64, lambda: f64) -> Result<f64> {
    let cfg = SvtConfig::new(theta, lambda, 1)?;
    binary_scenario(k, theta)?.end_to_end_log_ratio(SvtVariant::Binary, &cfg)
}

/// Closed form of the vanilla counterexample ratio (θ = 0, t = 1): every
/// ⊥ for the `a`-count contributes e^{1/λ} while θ̂ < 1, and the released
/// value's density contributes another e^{1/λ}.
pub fn vanilla_svt_log_ratio(k: usize, lambda: f64) -> Result<f64> {
    crate::dp::check_scale(lambda)?;
    if k < 1 {
        return Err(Error::param("k must be at least 1"));
    }
    Ok(k as f64 / lambda)
}

/// The same ratio evaluated by quadrature over θ̂ ∈ (−∞, 1).
pub fn vanilla_svt_log_ratio_quadrature(k: usize, lambda: f64) -> Result<f64> {
    let cfg = SvtConfig::new(0.0, lambda, 1)?;
    vanilla_scenario(k)?.end_to_end_log_ratio(SvtVariant::Vanilla, &cfg)
}

/// Every output sequence a halting binary-output variant can emit on `len`
/// queries with budget `t` (or, for `t >= len`, every bit string).
pub fn enumerate_events(len: usize, t: usize) -> Vec<Vec<SvtOutput>> {
    fn go(prefix: &mut Vec<SvtOutput>, ones: usize, len: usize, t: usize, out: &mut Vec<Vec<SvtOutput>>) {
        if ones == t || prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for o in [SvtOutput::Zero, SvtOutput::One] {
            prefix.push(o);
            go(prefix, ones + usize::from(o == SvtOutput::One), len, t, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), 0, len, t, &mut out);
    out
}

/// Name, datasets and queries of one scenario family.
type Family = (&'static str, Vec<Vec<char>>, Vec<CountQuery>);

/// Scenario battery for the halting binary-output variants: both
/// counterexample constructions with every reachable event, a batch of
/// seeded random neighbor pairs with random count queries, and an
/// identical-dataset control.
pub fn halting_battery(k: usize, ts: &[usize], thetas: &[f64], random: usize, seed: u64) -> Result<Vec<(AuditScenario, usize)>> {
    if k < 2 {
        return Err(Error::param("battery needs k >= 2"));
    }
    let mut out = Vec::new();
    let h = k / 2;
    let families: [Family; 2] = [
        (
            "split",
            vec![vec!['a', 'b'], vec!['a', 'b', 'b'], vec!['b', 'b']],
            [vec![CountQuery::of('a'); h], vec![CountQuery::of('b'); k - h]].concat(),
        ),
        (
            "tail",
            vec![vec!['a', 'b'], vec!['a', 'a', 'b'], vec!['a', 'a']],
            [vec![CountQuery::of('a'); k - 1], vec![CountQuery::of('b')]].concat(),
        ),
    ];
    for &t in ts {
        for &theta in thetas {
            for (name, datasets, queries) in &families {
                for (i, event) in enumerate_events(k, t).into_iter().enumerate() {
                    let name = format!("{name}-k{k}-t{t}-theta{theta}-e{i}");
                    out.push((AuditScenario { name, datasets: datasets.clone(), queries: queries.clone(), theta, event }, t));
                }
            }
        }
    }
    let mut rng = substream(seed, 0);
    let labels = ['a', 'b', 'c'];
    for r in 0..random {
        let n = rng.random_range(0..5);
        let base: Vec<char> = (0..n).map(|_| *labels.choose(&mut rng).expect("nonempty")).collect();
        let mut bigger = base.clone();
        bigger.push(*labels.choose(&mut rng).expect("nonempty"));
        let len = rng.random_range(2..=k.min(6));
        let queries = (0..len)
            .map(|_| {
                let mut ls: Vec<char> = labels.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                if ls.is_empty() {
                    ls.push('a');
                }
                CountQuery { labels: ls }
            })
            .collect::<Vec<_>>();
        let t = ts[r % ts.len()];
        let theta = thetas[r % thetas.len()] + f64::from(rng.random_range(-1..=1));
        for (i, event) in enumerate_events(len, t).into_iter().enumerate() {
            out.push((
                AuditScenario {
                    name: format!("random{r}-t{t}-e{i}"),
                    datasets: vec![base.clone(), bigger.clone()],
                    queries: queries.clone(),
                    theta,
                    event,
                },
                t,
            ));
        }
    }
    out.push((
        AuditScenario {
            name: "identical".into(),
            datasets: vec![vec!['a', 'b'], vec!['b', 'a']],
            queries: vec![CountQuery::of('a'), CountQuery::of('b')],
            theta: 1.0,
            event: vec![SvtOutput::One],
        },
        1,
    ));
    Ok(out)
}

/// Largest neighbor log-ratio of `variant` over a battery, together with the
/// scenario attaining it.
pub fn battery_max_log_ratio(variant: SvtVariant, battery: &[(AuditScenario, usize)], lambda: f64) -> Result<(f64, String)> {
    let ratios = par::map_slice(battery, |(s, t)| {
        let cfg = SvtConfig::new(s.theta, lambda, *t)?;
        s.max_neighbor_log_ratio(variant, &cfg)
    });
    let mut best = (f64::NEG_INFINITY, String::new());
    for (r, (s, _)) in ratios.into_iter().zip(battery) {
        let r = r?;
        if r > best.0 {
            best = (r, s.name.clone());
        }
    }
    Ok(best)
}

/// Exact neighbor log-ratio bound check for the improved variant on one
/// scenario: the largest log-ratio over its consecutive pairs, both
/// directions.
pub fn improved_svt_log_ratio_bound(scenario: &AuditScenario, lambda: f64, t: usize) -> Result<f64> {
    let cfg = SvtConfig::new(scenario.theta, lambda, t)?;
    scenario.max_neighbor_log_ratio(SvtVariant::Improved, &cfg)
}

/// Empirical event frequency with its standard error over `trials` seeded
/// runs (binary-output variants only).
pub fn monte_carlo_event_probability(
    variant: SvtVariant,
    answers: &[f64],
    event: &[SvtOutput],
    cfg: &SvtConfig,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if variant == SvtVariant::Vanilla {
        return Err(Error::param("numeric outputs have zero point probability"));
    }
    check_event(variant, answers.len(), event, cfg.t)?;
    const CHUNK: usize = 1 << 16;
    let chunks = trials.div_ceil(CHUNK);
    let hits = par::map_indices(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let n = CHUNK.min(trials - c * CHUNK);
        let mut hits = 0usize;
        for _ in 0..n {
            if variant.run(answers, cfg, &mut rng)? == event {
                hits += 1;
            }
        }
        Ok::<_, Error>(hits)
    });
    let hits: usize = hits.into_iter().sum::<Result<usize>>()?;
    let p = hits as f64 / trials as f64;
    Ok((p, (p * (1.0 - p) / trials as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Satisfies,
    Violates,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfies => "SATISFIES",
            Verdict::Violates => "VIOLATES",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub variant: SvtVariant,
    pub scenario: String,
    pub k: usize,
    pub lambda: f64,
    pub theta: f64,
    pub t: usize,
    pub log_ratio: f64,
    pub claimed_bound: f64,
    pub verdict: Verdict,
}

/// Tolerance granted to quadrature when comparing against a bound.
pub const AUDIT_TOLERANCE: f64 = 1e-8;

fn entry(variant: SvtVariant, scenario: String, k: usize, cfg: &SvtConfig, log_ratio: f64, claimed_bound: f64) -> AuditEntry {
    let verdict = if log_ratio > claimed_bound + AUDIT_TOLERANCE { Verdict::Violates } else { Verdict::Satisfies };
    AuditEntry { variant, scenario, k, lambda: cfg.lambda, theta: cfg.threshold, t: cfg.t, log_ratio, claimed_bound, verdict }
}

/// Audit one variant at the given parameters.
///
/// The binary and vanilla variants are checked on their two-step chains,
/// against twice the claimed per-neighbor guarantee `2/λ`. The halting
/// variants are checked per neighbor pair over [`halting_battery`] against
/// `2/λ`.
pub fn audit_variant(variant: SvtVariant, k: usize, lambda: f64, theta: f64, t: usize) -> Result<AuditEntry> {
    let cfg = SvtConfig::new(theta, lambda, t)?;
    let eps = 2.0 / lambda;
    match variant {
        SvtVariant::Binary => {
            let s = binary_scenario(k, theta)?;
            let r = s.end_to_end_log_ratio(variant, &cfg)?;
            Ok(entry(variant, s.name, k, &cfg, r, 2.0 * eps))
        }
        SvtVariant::Vanilla => {
            let s = vanilla_scenario(k)?;
            let cfg = SvtConfig { threshold: s.theta, ..cfg };
            let r = s.end_to_end_log_ratio(variant, &cfg)?;
            Ok(entry(variant, s.name, k, &cfg, r, 2.0 * eps))
        }
        SvtVariant::Reduced | SvtVariant::Improved => {
            let battery = halting_battery(k, &[t], &[theta], 12, k as u64)?;
            let (r, name) = battery_max_log_ratio(variant, &battery, lambda)?;
            Ok(entry(variant, format!("battery({} scenarios, worst {name})", battery.len()), k, &cfg, r, eps))
        }
    }
}

/// The default battery: binary at k = 16, vanilla at k = 8, and the two
/// halting variants at k = 8, t = 2, all with λ = 2.
pub fn default_audit() -> Result<Vec<AuditEntry>> {
    Ok(vec![
        audit_variant(SvtVariant::Binary, 16, 2.0, 1.0, 1)?,
        audit_variant(SvtVariant::Vanilla, 8, 2.0, 0.0, 1)?,
        audit_variant(SvtVariant::Reduced, 8, 2.0, 1.0, 2)?,
        audit_variant(SvtVariant::Improved, 8, 2.0, 1.0, 2)?,
    ])
}

pub fn render_audit_table(entries: &[AuditEntry]) -> String {
    let mut s = format!(
        "{:<9} {:>4} {:>7} {:>7} {:>3} {:>12} {:>12}  {}\n",
        "variant", "k", "lambda", "theta", "t", "log_ratio", "bound", "verdict"
    );
    for e in entries {
        s += &format!(
            "{:<9} {:>4} {:>7} {:>7} {:>3} {:>12.6} {:>12.6}  {}\n",
            e.variant.name(), e.k, e.lambda, e.theta, e.t, e.log_ratio, e.claimed_bound, e.verdict
        );
    }
    s
}
