use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::json;

use privtree::dp::NoiseSource;
use privtree::eval::{
    default_delta, exact_answers, gaussian_mixture, gen_workload, mean, median, relative_error, run_trials,
    uniform_points, Method, SizeClass, TrialPlan, WorkloadSpec,
};
use privtree::markov::{
    build_private_pst, generate_sequences, read_sequences, top_k_strings, Pst, PstOptions, SequenceDataset,
};
use privtree::rng::{substream, Stream};
use privtree::spatial::{
    batch_range_count, io as spatial_io, release_privtree, BuildOptions, DecompTree, SpatialDataset, SpatialDomain,
    SplitRule,
};
use privtree::svt::{audit_variant, render_audit_table, SvtVariant};

use crate::config::{Format, RunConfig};
use crate::fail::CliError;

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Release a private spatial decomposition with noisy leaf counts.
    SpatialBuild,
    /// Answer a range-count workload from a released tree.
    RangeQuery(RangeQueryArgs),
    /// Release a private prediction suffix tree.
    SeqBuild(SeqBuildArgs),
    /// Most frequent strings according to a suffix tree.
    SeqTopk(SeqTopkArgs),
    /// Sample synthetic sequences from a suffix tree.
    SeqSynth(SeqSynthArgs),
    /// Compute exact privacy-loss ratios of sparse-vector variants.
    SvtAudit(SvtAuditArgs),
    /// Compare spatial synopses over repeated trials.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct RangeQueryArgs {
    /// Released tree (JSON).
    #[arg(long)]
    tree: PathBuf,
    /// Queries, one per line: lo1,...,lod,hi1,...,hid.
    #[arg(long)]
    workload: PathBuf,
    /// Smoothing term of the relative error [default: 0.1% of the data size].
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SeqBuildArgs {
    /// Comma-separated alphabet [default: the distinct tokens of the input].
    #[arg(long, value_delimiter = ',')]
    alphabet: Option<Vec<String>>,
}

/// Where a suffix tree comes from: a file, or a build from `--input`.
#[derive(Debug, Args)]
pub struct PstSource {
    /// Previously released suffix tree (JSON).
    #[arg(long)]
    pst: Option<PathBuf>,
    #[command(flatten)]
    build: SeqBuildArgs,
}

#[derive(Debug, Args)]
pub struct SeqTopkArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    source: PstSource,
}

#[derive(Debug, Args)]
pub struct SeqSynthArgs {
    /// Sequences to draw.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[command(flatten)]
    source: PstSource,
}

#[derive(Debug, Args)]
pub struct SvtAuditArgs {
    /// binary, vanilla, reduced, improved or all.
    #[arg(long, default_value = "all")]
    variant: String,
    /// Number of queries [default: 16 binary, 8 otherwise].
    #[arg(long)]
    k: Option<usize>,
    /// Noise scale [default: 2].
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Positive answers before halting [default: 1 binary and vanilla, 2 otherwise].
    #[arg(long)]
    t: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Comma-separated methods: privtree, ug, simpletree-h<height>.
    #[arg(long, value_delimiter = ',', default_value = "privtree,ug")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Query size class: small, medium or large.
    #[arg(long, default_value = "medium")]
    size_class: String,
    /// Queries per workload.
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    /// Generate the data instead of reading --input: uniform or gaussian.
    #[arg(long)]
    synthetic: Option<String>,
    /// Points to generate.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Dimensions of generated data when no --domain is given.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Mixture components for gaussian data.
    #[arg(long, default_value_t = 5)]
    components: usize,
    /// Smoothing term of the relative error [default: 0.1% of the data size].
    #[arg(long)]
    delta: Option<f64>,
}

/// Laplace noise from a seeded stream, or none at all.
enum Noise {
    Off,
    On(Box<Stream>),
}

impl Noise {
    fn new(cfg: &RunConfig) -> Noise {
        if cfg.noiseless {
            Noise::Off
        } else {
            Noise::On(Box::new(substream(cfg.seed(), 0)))
        }
    }
}

impl NoiseSource for Noise {
    fn laplace(&mut self, scale: f64) -> f64 {
        match self {
            Noise::Off => 0.0,
            Noise::On(rng) => NoiseSource::laplace(rng.as_mut(), scale),
        }
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> CliResult {
    match cmd {
        Command::SpatialBuild => spatial_build(cfg),
        Command::RangeQuery(a) => range_query(a, cfg),
        Command::SeqBuild(a) => seq_build(a, cfg),
        Command::SeqTopk(a) => seq_topk(a, cfg),
        Command::SeqSynth(a) => seq_synth(a, cfg),
        Command::SvtAudit(a) => svt_audit(a, cfg),
        Command::Eval(a) => eval(a, cfg),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

/// Write `text` to `path`, or to standard output.
fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::input(e.to_string()))
        }
    }
}

fn to_json(value: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Points from `path`. Without an explicit domain the unit cube of the
/// data's dimension is used.
fn read_points(path: &Path, domain: Option<SpatialDomain>) -> CliResult<SpatialDataset> {
    let text = read_text(path)?;
    let domain = match domain {
        Some(d) => d,
        None => {
            let width = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty() && !l.starts_with('#'))
                .map_or(0, |l| l.split(',').count());
            if width == 0 {
                return Err(CliError::input(format!("{} holds no points", path.display())));
            }
            SpatialDomain::unit(width)
        }
    };
    Ok(spatial_io::read_dataset(text.as_bytes(), domain)?)
}

fn spatial_build(cfg: &RunConfig) -> CliResult {
    let epsilon = cfg.epsilon()?;
    let theta = cfg.theta()?;
    let share = cfg.budget_split()?.unwrap_or(0.5);
    let domain = cfg.domain()?;
    let fanout = cfg.spatial_fanout(domain.as_ref().map(SpatialDomain::dims))?;
    let input = cfg.input()?;

    let data = read_points(input, domain)?;
    let dims = data.dims();
    let split = match fanout {
        Some(f) => SplitRule::for_fanout(f, dims).map_err(|e| CliError::config(e.to_string()))?,
        None => SplitRule::AllDims,
    };
    let opts = BuildOptions { depth_cap: cfg.depth_cap(), split };

    let start = Instant::now();
    let tree = release_privtree(&data, epsilon, theta, share, &opts, &mut Noise::new(cfg))?;
    let seconds = start.elapsed().as_secs_f64();

    emit(cfg.output.as_deref(), &format!("{}\n", tree.to_json()?))?;
    let summary = json!({
        "nodes": tree.len(),
        "leaves": tree.leaves().count(),
        "height": tree.height(),
        "fanout": tree.fanout(),
        "epsilon": tree.params().epsilon,
        "build_seconds": seconds,
    });
    let text = match cfg.format() {
        Format::Json => format!("{summary}\n"),
        Format::Table => format!(
            "nodes {}\nleaves {}\nheight {}\nbuild {:.3} s\n",
            tree.len(),
            tree.leaves().count(),
            tree.height(),
            seconds
        ),
    };
    // keep stdout for the tree when no output file is given
    if cfg.output.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    Ok(())
}

#[derive(Serialize)]
struct RangeReport {
    queries: usize,
    answers: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_relative_error: Option<f64>,
}

fn range_query(args: &RangeQueryArgs, cfg: &RunConfig) -> CliResult {
    if let Some(d) = args.delta {
        if !(d.is_finite() && d > 0.0) {
            return Err(CliError::config(format!("--delta must be positive, got {d}")));
        }
    }
    let tree = DecompTree::from_json(&read_text(&args.tree)?)?;
    let dims = tree.domain().dims();
    let queries = spatial_io::read_workload(read_text(&args.workload)?.as_bytes(), dims)?;
    let answers = batch_range_count(&tree, &queries)?;

    let mut report = RangeReport {
        queries: queries.len(),
        answers,
        relative_errors: None,
        delta: None,
        mean_relative_error: None,
        median_relative_error: None,
    };
    if let Some(path) = &cfg.input {
        let data = read_points(path, Some(tree.domain().clone()))?;
        let delta = args.delta.unwrap_or_else(|| default_delta(data.len()));
        let exact = exact_answers(&data, &queries)?;
        let errors = report
            .answers
            .iter()
            .zip(&exact)
            .map(|(&e, &x)| relative_error(e, x, delta))
            .collect::<Result<Vec<_>, _>>()?;
        if !errors.is_empty() {
            report.mean_relative_error = Some(mean(&errors));
            report.median_relative_error = Some(median(&errors));
        }
        report.delta = Some(delta);
        report.relative_errors = Some(errors);
    }

    let text = match cfg.format() {
        Format::Json => to_json(&report)?,
        Format::Table => {
            let mut s = String::from("query answer relative_error\n");
            for (i, a) in report.answers.iter().enumerate() {
                let re = report.relative_errors.as_ref().map_or("-".into(), |r| format!("{:.6}", r[i]));
                s += &format!("{i} {a:.4} {re}\n");
            }
            if let (Some(m), Some(md)) = (report.mean_relative_error, report.median_relative_error) {
                s += &format!("mean {m:.6} median {md:.6}\n");
            }
            s
        }
    };
    emit(cfg.output.as_deref(), &text)
}

/// Everything `seq-build` needs that can be checked without the data.
struct SeqPlan {
    epsilon: f64,
    lmax: usize,
    opts: PstOptions,
}

fn seq_plan(cfg: &RunConfig) -> CliResult<SeqPlan> {
    Ok(SeqPlan {
        epsilon: cfg.epsilon()?,
        lmax: cfg.lmax()?,
        opts: PstOptions {
            tree_share: cfg.budget_split()?,
            depth_cap: cfg.depth_cap() as usize,
            theta: cfg.theta()?,
        },
    })
}

fn build_pst(args: &SeqBuildArgs, plan: &SeqPlan, cfg: &RunConfig) -> CliResult<Pst> {
    let input = cfg.input()?;
    let raw = read_sequences(read_text(input)?.as_bytes())?;
    let data = match &args.alphabet {
        Some(tokens) => {
            let alphabet = privtree::markov::Alphabet::new(tokens.iter().map(String::as_str))
                .map_err(|e| CliError::config(format!("--alphabet: {e}")))?;
            SequenceDataset::from_tokens_with(alphabet, &raw, plan.lmax)?
        }
        None => {
            if raw.iter().all(Vec::is_empty) {
                return Err(CliError::input(format!("{} holds no tokens", input.display())));
            }
            SequenceDataset::from_tokens(&raw, plan.lmax)?
        }
    };
    if let Some(f) = cfg.fanout {
        if f != data.alphabet.fanout() {
            return Err(CliError::config(format!(
                "--fanout {f} does not match the alphabet: {} tokens give fanout {}",
                data.alphabet.len(),
                data.alphabet.fanout()
            )));
        }
    }
    Ok(build_private_pst(&data, plan.epsilon, &plan.opts, &mut Noise::new(cfg))?)
}

fn seq_build(args: &SeqBuildArgs, cfg: &RunConfig) -> CliResult {
    let plan = seq_plan(cfg)?;
    cfg.input()?;
    let pst = build_pst(args, &plan, cfg)?;
    emit(cfg.output.as_deref(), &format!("{}\n", pst.to_json()?))?;
    let line = match cfg.format() {
        Format::Json => format!("{}\n", json!({ "nodes": pst.len(), "leaves": pst.leaves().count() })),
        Format::Table => format!("nodes {}\nleaves {}\n", pst.len(), pst.leaves().count()),
    };
    if cfg.output.is_some() {
        print!("{line}");
    } else {
        eprint!("{line}");
    }
    Ok(())
}

/// Load `--pst`, or build from `--input` with the build flags.
fn obtain_pst(src: &PstSource, cfg: &RunConfig) -> CliResult<Pst> {
    match (&src.pst, &cfg.input) {
        (Some(_), Some(_)) => Err(CliError::config("give either --pst or --input, not both")),
        (None, None) => Err(CliError::config("one of --pst or --input is required")),
        (Some(path), None) => Ok(Pst::from_json(&read_text(path)?)?),
        (None, Some(_)) => {
            let plan = seq_plan(cfg)?;
            build_pst(&src.build, &plan, cfg)
        }
    }
}

fn seq_topk(args: &SeqTopkArgs, cfg: &RunConfig) -> CliResult {
    if args.k == 0 {
        return Err(CliError::config("--k must be at least 1"));
    }
    let pst = obtain_pst(&args.source, cfg)?;
    let top = top_k_strings(&pst, args.k)?;
    let alphabet = pst.alphabet();
    let text = match cfg.format() {
        Format::Json => {
            let rows: Vec<_> =
                top.iter().map(|(s, est)| json!({ "string": alphabet.render(s), "estimate": est })).collect();
            to_json(&rows)?
        }
        Format::Table => top.iter().map(|(s, est)| format!("{est:.4}\t{}\n", alphabet.render(s))).collect(),
    };
    emit(cfg.output.as_deref(), &text)
}

fn seq_synth(args: &SeqSynthArgs, cfg: &RunConfig) -> CliResult {
    let pst = obtain_pst(&args.source, cfg)?;
    let mut rng = substream(cfg.seed(), 1);
    let seqs = generate_sequences(&pst, args.count, &mut rng)?;
    let alphabet = pst.alphabet();
    let text = match cfg.format() {
        Format::Json => {
            let rows: Vec<_> = seqs
                .iter()
                .map(|s| json!({ "sequence": alphabet.render(&s.symbols), "terminated": s.terminated }))
                .collect();
            to_json(&rows)?
        }
        Format::Table => seqs.iter().map(|s| format!("{}\n", alphabet.render(&s.symbols))).collect(),
    };
    emit(cfg.output.as_deref(), &text)
}

/// Defaults (k, θ, t) of one audit.
fn audit_defaults(v: SvtVariant) -> (usize, f64, usize) {
    match v {
        SvtVariant::Binary => (16, 1.0, 1),
        SvtVariant::Vanilla => (8, 0.0, 1),
        SvtVariant::Reduced | SvtVariant::Improved => (8, 1.0, 2),
    }
}

fn svt_audit(args: &SvtAuditArgs, cfg: &RunConfig) -> CliResult {
    let variants: Vec<SvtVariant> = if args.variant == "all" {
        SvtVariant::ALL.to_vec()
    } else {
        vec![args.variant.parse().map_err(|e: privtree::Error| CliError::config(e.to_string()))?]
    };
    let lambda = args.lambda.unwrap_or(2.0);
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(CliError::config(format!("--lambda must be positive, got {lambda}")));
    }
    if args.t == Some(0) {
        return Err(CliError::config("--t must be at least 1"));
    }
    let theta = cfg.theta.map(|_| cfg.theta()).transpose()?;
    let mut plans = Vec::new();
    for v in variants {
        let (dk, dtheta, dt) = audit_defaults(v);
        let k = args.k.unwrap_or(dk);
        if k == 0 {
            return Err(CliError::config("--k must be at least 1"));
        }
        if v == SvtVariant::Binary && !k.is_multiple_of(2) {
            return Err(CliError::config(format!("the binary scenario needs an even --k, got {k}")));
        }
        plans.push((v, k, theta.unwrap_or(dtheta), args.t.unwrap_or(dt)));
    }
    let entries = plans
        .into_iter()
        .map(|(v, k, theta, t)| audit_variant(v, k, lambda, theta, t))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match cfg.format() {
        Format::Json => to_json(&entries)?,
        Format::Table => render_audit_table(&entries),
    };
    emit(cfg.output.as_deref(), &text)
}

fn eval(args: &EvalArgs, cfg: &RunConfig) -> CliResult {
    let epsilon = cfg.epsilon()?;
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::config(e.to_string()))?;
    let share = cfg.budget_split()?;
    let methods: Vec<Method> = methods
        .into_iter()
        .map(|m| match (m, share) {
            (Method::PrivTree { .. }, Some(s)) => Method::PrivTree { tree_share: s },
            (m, _) => m,
        })
        .collect();
    let size_class: SizeClass = args.size_class.parse().map_err(|e: privtree::Error| CliError::config(e.to_string()))?;
    if args.trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    if let Some(d) = args.delta {
        if !(d.is_finite() && d > 0.0) {
            return Err(CliError::config(format!("--delta must be positive, got {d}")));
        }
    }
    let domain = cfg.domain()?;
    let seed = cfg.seed();
    let data = match (&args.synthetic, &cfg.input) {
        (Some(_), Some(_)) => return Err(CliError::config("give either --synthetic or --input, not both")),
        (None, None) => return Err(CliError::config("one of --synthetic or --input is required")),
        (None, Some(path)) => read_points(path, domain)?,
        (Some(kind), None) => {
            if args.dims == 0 {
                return Err(CliError::config("--dims must be at least 1"));
            }
            let domain = domain.unwrap_or_else(|| SpatialDomain::unit(args.dims));
            match kind.as_str() {
                "uniform" => uniform_points(args.n, &domain, seed)?,
                "gaussian" => gaussian_mixture(args.n, &domain, args.components, seed)?,
                other => return Err(CliError::config(format!("unknown --synthetic {other:?} (uniform or gaussian)"))),
            }
        }
    };
    let queries =
        gen_workload(data.domain(), &WorkloadSpec { size_class, count: args.queries, seed: seed.wrapping_add(1) });
    let plan = TrialPlan {
        methods,
        epsilon,
        trials: args.trials,
        seed,
        delta: args.delta.unwrap_or_else(|| default_delta(data.len())),
    };
    let report = run_trials(&data, &queries, &plan)?;
    let text = match cfg.format() {
        Format::Json => to_json(&report)?,
        Format::Table => report.to_table(),
    };
    emit(cfg.output.as_deref(), &text)
}
