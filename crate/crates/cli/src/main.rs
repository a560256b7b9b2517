//! Verification CLI for graphon-signal analysis.
//!
//! Exit codes: 0 on success, 1 on usage or IO errors, 2 when a verified
//! assertion (a bound or a trend) is violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use graphonsig::bounds::{
    covering_k_log2_with_exponent, covering_number_log2_with_exponent, generalization_bound,
    xi_inverse_with_exponent, xi_with_exponent, BoundQuery, DEFAULT_COVERING_EXPONENT,
};
use graphonsig::cutdist::{cut_distance_exact, cut_distance_upper, SearchBudget};
use graphonsig::cutnorm::{kernel_cut_norm_exact, kernel_cut_norm_heuristic, signal_cut_norm};
use graphonsig::experiments::{
    default_class_models, generalization_gap_experiment, stability_experiment, ClippedSquaredLoss,
};
use graphonsig::mpnn::{
    forward_graph, forward_graphon, random_spec, readout_graph, readout_graphon,
    verify_commutation, verify_lipschitz, LipschitzSetting, MpnnSpec,
};
use graphonsig::regularity::{combine, project, quantize_signal, weak_regularity_decompose};
use graphonsig::report::{Cell, ReportTable};
use graphonsig::rng::substream;
use graphonsig::sampling::{
    bernoulli_simple, draw_points, estimate_sampling_distance, evaluate_weighted, SampleMode,
};
use graphonsig::types::{random_graph_signal, resample, GraphSignal, GraphonSignal};

/// Largest common-refinement resolution `cutdist` will build.
const CUTDIST_LCM_CAP: usize = 4096;

#[derive(Parser)]
#[command(name = "graphonsig", version, about = "Cut metrics, regularity, sampling, and MPNN verification on step graphon-signals")]
struct Cli {
    /// Base seed for anything random; never defaults to the clock.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Stdout format for tabular results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Cut norm of a graphon-signal (kernel witness search plus signal term).
    Cutnorm(CutnormArgs),
    /// Cut distance between two graphon-signals over block permutations.
    Cutdist(CutdistArgs),
    /// Weak regularity decomposition into an approximating SBM.
    Regularize(RegularizeArgs),
    /// Covering-number and rate-function calculators.
    Bounds(BoundsArgs),
    /// Generalization-bound calculator.
    Genbound(GenboundArgs),
    /// Sample a graph-signal from a graphon-signal.
    Sample(SampleArgs),
    /// Monte Carlo sampling-distance convergence report.
    VerifySampling(VerifySamplingArgs),
    /// Run a message passing network on a graphon- or graph-signal.
    MpnnRun(MpnnRunArgs),
    /// Check that the network commutes with graph-to-graphon induction.
    VerifyCommutation(VerifyCommutationArgs),
    /// Monte Carlo check of the Lipschitz bound with exact cut norms.
    VerifyLipschitz(VerifyLipschitzArgs),
    /// Subsampling-stability experiment for a network.
    VerifyStability(VerifyStabilityArgs),
    /// Synthetic generalization-gap experiment.
    GenGap(GenGapArgs),
}

#[derive(Args)]
struct CutnormArgs {
    #[arg(long)]
    input: PathBuf,
    /// Exhaustive witness search (the default).
    #[arg(long, conflicts_with = "heuristic")]
    exact: bool,
    /// Local-search witnessed estimate for large resolutions.
    #[arg(long)]
    heuristic: bool,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
}

#[derive(Args)]
struct CutdistArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Exhaustive minimum over all block permutations (resolution <= 8).
    #[arg(long, conflicts_with = "search")]
    exact: bool,
    /// Swap local search returning a certified upper bound.
    #[arg(long)]
    search: bool,
    /// Restart budget of the permutation search.
    #[arg(long, default_value_t = 4)]
    budget: usize,
}

#[derive(Args)]
struct RegularizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Signal quantization width (defaults to epsilon).
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    max_steps: usize,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    c: f64,
    /// Exponent constant in the per-axis ball count (default 9/4).
    #[arg(long, default_value_t = DEFAULT_COVERING_EXPONENT)]
    exponent: f64,
}

#[derive(Args)]
struct GenboundArgs {
    /// Training sample count.
    #[arg(long = "N")]
    n: f64,
    /// Class count.
    #[arg(long = "C")]
    classes: f64,
    /// Product Lipschitz constant of model and loss.
    #[arg(long = "L")]
    lipschitz: f64,
    /// Failure-probability parameter in (0, 2].
    #[arg(long)]
    p: f64,
    /// Loss at the origin.
    #[arg(long)]
    loss0: f64,
    /// Covering constant, > 1.
    #[arg(long, default_value_t = 1.5)]
    c: f64,
    /// Signal bound recorded with the query.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
    /// Draw Bernoulli self-loops on the diagonal too (simple mode).
    #[arg(long)]
    self_loops: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Weighted,
    Simple,
}

#[derive(Args)]
struct VerifySamplingArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "k-grid", value_delimiter = ',', default_values_t = vec![16usize, 32, 64, 128])]
    k_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Weighted)]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
    /// Inversions allowed in the non-increasing mean-distance trend.
    #[arg(long, default_value_t = 1)]
    allowed_inversions: usize,
}

#[derive(Args)]
struct MpnnRunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Graphon-signal ("m"/"graphon") or graph-signal ("n"/"adjacency") JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyCommutationArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Largest graph size to draw.
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args)]
struct VerifyLipschitzArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    setting: u8,
    #[arg(long, default_value_t = 500)]
    trials: usize,
}

#[derive(Args)]
struct VerifyStabilityArgs {
    #[arg(long)]
    input: PathBuf,
    /// Network spec file; omitted means a seeded random bounded-setting spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    setting: u8,
    #[arg(long = "k-grid", value_delimiter = ',', default_values_t = vec![16usize, 64, 256])]
    k_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenGapArgs {
    /// First class model (defaults to a built-in assortative SBM).
    #[arg(long = "class-a")]
    class_a: Option<PathBuf>,
    /// Second class model (defaults to a built-in disassortative SBM).
    #[arg(long = "class-b")]
    class_b: Option<PathBuf>,
    /// Network spec file; omitted means a seeded random bounded-setting spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "n-grid", value_delimiter = ',', default_values_t = vec![50usize, 200, 800])]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: failed to size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn emit_table(table: &ReportTable, out: &Path, format: Format) -> Result<()> {
    table
        .write_with_mirror(out)
        .with_context(|| format!("writing {}", out.display()))?;
    if format == Format::Csv {
        print!("{}", table.to_csv_string());
    }
    Ok(())
}

/// Count adjacent inversions of the non-increasing trend in `means`.
fn trend_inversions(means: &[f64]) -> usize {
    means.windows(2).filter(|w| w[1] > w[0]).count()
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Cutnorm(args) => cmd_cutnorm(args),
        Command::Cutdist(args) => cmd_cutdist(args),
        Command::Regularize(args) => cmd_regularize(args, cli.seed),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Genbound(args) => cmd_genbound(args),
        Command::Sample(args) => cmd_sample(args, cli.seed),
        Command::VerifySampling(args) => cmd_verify_sampling(args, cli.seed, cli.format),
        Command::MpnnRun(args) => cmd_mpnn_run(args),
        Command::VerifyCommutation(args) => cmd_verify_commutation(args, cli.seed),
        Command::VerifyLipschitz(args) => cmd_verify_lipschitz(args, cli.seed),
        Command::VerifyStability(args) => cmd_verify_stability(args, cli.seed, cli.format),
        Command::GenGap(args) => cmd_gen_gap(args, cli.seed, cli.format),
    }
}

fn cmd_cutnorm(args: CutnormArgs) -> Result<u8> {
    let x: GraphonSignal = read_json(&args.input)?;
    let kernel = x.graphon().as_kernel();
    let kernel_result = if args.heuristic {
        kernel_cut_norm_heuristic(&kernel, args.restarts, 0)
    } else {
        kernel_cut_norm_exact(&kernel)?
    };
    let signal_term = signal_cut_norm(x.signal());
    #[derive(Serialize)]
    struct Out<'a> {
        value: f64,
        graphon_cut_norm: f64,
        signal_cut_norm: f64,
        witness_s: &'a [usize],
        witness_t: &'a [usize],
        exact: bool,
    }
    print_json(&Out {
        value: kernel_result.value + signal_term,
        graphon_cut_norm: kernel_result.value,
        signal_cut_norm: signal_term,
        witness_s: &kernel_result.witness_s,
        witness_t: &kernel_result.witness_t,
        exact: kernel_result.exact,
    })?;
    Ok(0)
}

fn cmd_cutdist(args: CutdistArgs) -> Result<u8> {
    let a: GraphonSignal = read_json(&args.a)?;
    let b: GraphonSignal = read_json(&args.b)?;
    let target = num_integer::lcm(a.resolution(), b.resolution());
    if target > CUTDIST_LCM_CAP {
        bail!(
            "common refinement {} exceeds the cap {}; resample the inputs first",
            target,
            CUTDIST_LCM_CAP
        );
    }
    let a = resample(&a, target)?;
    let b = resample(&b, target)?;
    if args.exact {
        let result = cut_distance_exact(&a, &b)?;
        #[derive(Serialize)]
        struct Out {
            value: f64,
            permutation: Vec<usize>,
            certified_upper: bool,
            exact: bool,
        }
        print_json(&Out {
            value: result.value,
            permutation: result.permutation.indices().to_vec(),
            certified_upper: result.certified_upper,
            exact: true,
        })?;
    } else {
        let budget = SearchBudget {
            restarts: args.budget.max(1),
            ..SearchBudget::default()
        };
        let report = cut_distance_upper(&a, &b, &budget)?;
        #[derive(Serialize)]
        struct Out {
            value: f64,
            permutation: Vec<usize>,
            certified_upper: bool,
            heuristic_estimate: f64,
            sweeps_used: usize,
        }
        print_json(&Out {
            value: report.result.value,
            permutation: report.result.permutation.indices().to_vec(),
            certified_upper: report.result.certified_upper,
            heuristic_estimate: report.heuristic_estimate,
            sweeps_used: report.sweeps_used,
        })?;
    }
    Ok(0)
}

fn cmd_regularize(args: RegularizeArgs, _seed: u64) -> Result<u8> {
    let x: GraphonSignal = read_json(&args.input)?;
    let rho = args.rho.unwrap_or(args.epsilon);
    let decomposition = weak_regularity_decompose(x.graphon(), args.epsilon, args.max_steps)?;
    let (_, signal_partition) = quantize_signal(x.signal(), rho)?;
    let partition = combine(&decomposition.partition, &signal_partition)?;
    let approximation = project(&x, &partition)?;
    #[derive(Serialize)]
    struct Out {
        approximation: GraphonSignal,
        partition_classes: usize,
        partition_assignment: Vec<usize>,
        steps: usize,
        residual_cut_norm: f64,
        residual_exact: bool,
        quantization_width: f64,
    }
    let out = Out {
        partition_classes: partition.classes(),
        partition_assignment: partition.assignment().to_vec(),
        steps: decomposition.steps.len(),
        residual_cut_norm: decomposition.residual_cut_norm,
        residual_exact: decomposition.exact,
        quantization_width: rho,
        approximation,
    };
    write_json(&args.out, &out)?;
    print_json(&serde_json::json!({
        "out": args.out.display().to_string(),
        "steps": out.steps,
        "residual_cut_norm": out.residual_cut_norm,
        "residual_exact": out.residual_exact,
        "partition_classes": out.partition_classes,
    }))?;
    Ok(0)
}

fn cmd_bounds(args: BoundsArgs) -> Result<u8> {
    let k_log2 = covering_k_log2_with_exponent(args.epsilon, args.c, args.exponent)?;
    let kappa_log2 = covering_number_log2_with_exponent(args.epsilon, args.c, args.exponent)?;
    let xi_log2 = xi_with_exponent(args.epsilon, args.c, args.exponent)?;
    print_json(&serde_json::json!({
        "epsilon": args.epsilon,
        "c": args.c,
        "exponent": args.exponent,
        "log2_k": k_log2,
        "log2_covering_number": kappa_log2,
        "log2_xi": xi_log2,
    }))?;
    Ok(0)
}

fn cmd_genbound(args: GenboundArgs) -> Result<u8> {
    let query = BoundQuery {
        epsilon: 1.0,
        c: args.c,
        r: args.r,
        sample_count: args.n,
        class_count: args.classes,
        lipschitz: args.lipschitz,
        loss_at_zero: args.loss0,
        failure_probability: args.p,
    };
    let out = generalization_bound(&query)?;
    // Also report the radius the inverse rate chose, for plotting.
    let target = (args.n / (2.0 * args.classes)).log2();
    let check = xi_inverse_with_exponent(target, args.c, DEFAULT_COVERING_EXPONENT)?;
    debug_assert!((check - out.epsilon_star).abs() < 1e-12);
    print_json(&out)?;
    Ok(0)
}

fn cmd_sample(args: SampleArgs, seed: u64) -> Result<u8> {
    let x: GraphonSignal = read_json(&args.input)?;
    let draw = draw_points(args.k, seed)?;
    let g: GraphSignal = match args.mode {
        ModeArg::Weighted => evaluate_weighted(&x, &draw),
        ModeArg::Simple => bernoulli_simple(&x, &draw, seed ^ 0x6265726e, args.self_loops),
    };
    write_json(&args.out, &g)?;
    print_json(&serde_json::json!({
        "out": args.out.display().to_string(),
        "k": args.k,
        "mode": match args.mode { ModeArg::Weighted => "weighted", ModeArg::Simple => "simple" },
        "rng": graphonsig::rng::RNG_ALGORITHM,
        "seed": seed,
    }))?;
    Ok(0)
}

fn cmd_verify_sampling(args: VerifySamplingArgs, seed: u64, format: Format) -> Result<u8> {
    let x: GraphonSignal = read_json(&args.input)?;
    let mode = match args.mode {
        ModeArg::Weighted => SampleMode::Weighted,
        ModeArg::Simple => SampleMode::Simple,
    };
    let mut table = ReportTable::new(&["k", "trial", "l1_upper", "heuristic_estimate", "paper_bound"]);
    let mut summaries = Vec::new();
    for (ki, &k) in args.k_grid.iter().enumerate() {
        let report = estimate_sampling_distance(&x, k, args.trials, mode, seed ^ (ki as u64) << 32)?;
        for row in &report.rows {
            table.push(vec![
                Cell::from(row.k),
                Cell::from(row.trial),
                Cell::from(row.l1_upper),
                Cell::from(row.heuristic_estimate),
                Cell::from(row.paper_bound),
            ]);
        }
        summaries.push(report.summary);
    }
    emit_table(&table, &args.out, format)?;
    let means: Vec<f64> = summaries.iter().map(|s| s.mean_upper).collect();
    let inversions = trend_inversions(&means);
    let ok = inversions <= args.allowed_inversions;
    print_json(&serde_json::json!({
        "summaries": summaries,
        "trend_inversions": inversions,
        "trend_ok": ok,
    }))?;
    Ok(if ok { 0 } else { 2 })
}

fn cmd_mpnn_run(args: MpnnRunArgs) -> Result<u8> {
    let spec: MpnnSpec = read_json(&args.spec)?;
    spec.validate()?;
    let raw: serde_json::Value = read_json(&args.input)?;
    if raw.get("m").is_some() {
        let x: GraphonSignal = serde_json::from_value(raw)?;
        let out = forward_graphon(&spec, &x)?;
        write_json(&args.out, &out)?;
        let readout = spec.readout.then(|| readout_graphon(&out));
        print_json(&serde_json::json!({
            "out": args.out.display().to_string(),
            "kind": "graphon-signal",
            "readout": readout,
        }))?;
    } else if raw.get("n").is_some() {
        let g: GraphSignal = serde_json::from_value(raw)?;
        let out = forward_graph(&spec, &g)?;
        write_json(&args.out, &out)?;
        let readout = spec.readout.then(|| readout_graph(&out));
        print_json(&serde_json::json!({
            "out": args.out.display().to_string(),
            "kind": "graph-signal",
            "readout": readout,
        }))?;
    } else {
        bail!("input is neither a graphon-signal (\"m\") nor a graph-signal (\"n\")");
    }
    Ok(0)
}

fn cmd_verify_commutation(args: VerifyCommutationArgs, seed: u64) -> Result<u8> {
    let spec: MpnnSpec = read_json(&args.spec)?;
    spec.validate()?;
    let d = spec.in_dim().unwrap_or(1);
    let mut worst = 0.0f64;
    for trial in 0..args.trials {
        let mut rng = substream(seed, trial as u64);
        let n = 1 + (trial % args.n.max(1));
        let g = random_graph_signal(n, d, 1.0, &mut rng);
        worst = worst.max(verify_commutation(&spec, &g)?);
    }
    let ok = worst <= 1e-10;
    print_json(&serde_json::json!({
        "trials": args.trials,
        "max_node_count": args.n,
        "max_deviation": worst,
        "tolerance": 1e-10,
        "ok": ok,
    }))?;
    Ok(if ok { 0 } else { 2 })
}

fn cmd_verify_lipschitz(args: VerifyLipschitzArgs, seed: u64) -> Result<u8> {
    let spec: MpnnSpec = read_json(&args.spec)?;
    let setting = LipschitzSetting::from_index(args.setting)?;
    let report = verify_lipschitz(&spec, setting, args.trials, seed)?;
    let ok = report.violations == 0;
    print_json(&report)?;
    Ok(if ok { 0 } else { 2 })
}

fn cmd_verify_stability(args: VerifyStabilityArgs, seed: u64, format: Format) -> Result<u8> {
    let x: GraphonSignal = read_json(&args.input)?;
    let setting = LipschitzSetting::from_index(args.setting)?;
    let spec = match &args.spec {
        Some(path) => read_json(path)?,
        None => random_spec(setting, x.signal().channels(), 1, false, seed ^ 0x57ab),
    };
    let report = stability_experiment(&x, &spec, setting, &args.k_grid, args.trials, seed)?;
    let mut table = ReportTable::new(&[
        "k",
        "trial",
        "input_upper",
        "input_heuristic",
        "output_upper",
        "output_heuristic",
        "paper_bound",
    ]);
    for row in &report.rows {
        table.push(vec![
            Cell::from(row.k),
            Cell::from(row.trial),
            Cell::from(row.input_upper),
            Cell::from(row.input_heuristic),
            Cell::from(row.output_upper),
            Cell::from(row.output_heuristic),
            Cell::from(row.paper_bound),
        ]);
    }
    emit_table(&table, &args.out, format)?;
    let ok = report.violations == 0;
    print_json(&serde_json::json!({
        "per_k": report.per_k,
        "pair_lipschitz": report.pair_lipschitz,
        "lipschitz_violations": report.violations,
        "ok": ok,
    }))?;
    Ok(if ok { 0 } else { 2 })
}

fn cmd_gen_gap(args: GenGapArgs, seed: u64, format: Format) -> Result<u8> {
    let (default_a, default_b) = default_class_models();
    let class_a = match &args.class_a {
        Some(path) => read_json(path)?,
        None => default_a,
    };
    let class_b = match &args.class_b {
        Some(path) => read_json(path)?,
        None => default_b,
    };
    let spec = match &args.spec {
        Some(path) => read_json(path)?,
        None => random_spec(
            LipschitzSetting::Bounded,
            class_a.signal().channels(),
            2,
            true,
            seed ^ 0x9a9,
        ),
    };
    let report = generalization_gap_experiment(
        &class_a,
        &class_b,
        &spec,
        ClippedSquaredLoss::default(),
        &args.n_grid,
        args.reps,
        args.nodes,
        seed,
    )?;
    let mut table = ReportTable::new(&["n", "rep", "empirical_risk", "fresh_risk", "gap"]);
    for row in &report.rows {
        table.push(vec![
            Cell::from(row.n),
            Cell::from(row.rep),
            Cell::from(row.empirical_risk),
            Cell::from(row.fresh_risk),
            Cell::from(row.gap),
        ]);
    }
    emit_table(&table, &args.out, format)?;
    let means: Vec<f64> = report.per_n.iter().map(|s| s.mean_gap).collect();
    print_json(&serde_json::json!({
        "per_n": report.per_n,
        "trend_inversions": trend_inversions(&means),
    }))?;
    Ok(0)
}
