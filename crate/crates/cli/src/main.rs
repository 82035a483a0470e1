//! `randcomp`: bounds, scenario generation, source compression, and
//! lower-bound verification with reproducible file outputs.
//!
//! Exit codes: 0 success, 1 negative-but-valid answer (infeasible target,
//! attempts exhausted), 2 invalid input or resource cap.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use randcomp_core::bounds::{
    crossover_epsilon, emit_figure_data, exact_bound, general_equal_split_bound,
    multi_source_bound, single_source_bound, DeltaSplit, FigureKind,
};
use randcomp_core::compress::{
    compress_many, compress_single, CompressError, CompressionConfig, CompressionReport,
};
use randcomp_core::netmodel::format::{distribution_to_csv, network_from_json, network_to_json};
use randcomp_core::scenarios::{
    build_correlated_no_input, target_matching_distribution, xor_strategy_network,
};
use randcomp_core::witness::{
    deterministic_feasible, min_cardinality, FeasibilityProblem, DEFAULT_SEARCH_CAP,
};
use randcomp_core::{ConditionalDistribution, FinitePmf, ValidatedNetwork};

#[derive(Parser)]
#[command(name = "randcomp", version, about)]
struct Cli {
    /// Worker thread count for the parallel search and retry loops.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate source-cardinality bounds or emit figure data.
    Bounds(BoundsArgs),
    /// Write a builtin scenario as a network spec file.
    Scenario(ScenarioArgs),
    /// Compress one or more sources of a network spec.
    Compress(CompressArgs),
    /// Decide whether a target admits a realization at a given cardinality.
    VerifyLower(VerifyLowerArgs),
    /// Re-execute a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundMode {
    Single,
    Multi,
    General,
    Exact,
    Crossover,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Cardinality,
    Crossover,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    mode: BoundMode,
    /// Joint input alphabet size |X|.
    #[arg(long)]
    x: Option<u64>,
    /// Joint output alphabet size |A|.
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Party count.
    #[arg(long)]
    h: Option<u64>,
    /// Per-party alphabet product |X_i||A_i|.
    #[arg(long)]
    xa: Option<u64>,
    /// Source count.
    #[arg(long)]
    m: Option<u64>,
    /// Comma-separated tolerance split, e.g. 0.5,0.3,0.2.
    #[arg(long)]
    deltas: Option<String>,
    /// Write figure data instead of printing a single bound.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    figure: Option<Figure>,
    /// Comma-separated x values for figure output.
    #[arg(long, default_value = "2,4,8,16,32,64")]
    xs: String,
    /// Comma-separated h:m pairs for the crossover figure.
    #[arg(long, default_value = "2:1,2:2,2:3,3:1,3:2,3:3")]
    pairs: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioName {
    Correlated,
    MatchingXor,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    name: ScenarioName,
    /// Party count (correlated).
    #[arg(long)]
    h: Option<usize>,
    /// Source distribution: `uniform:K` or comma-separated weights (correlated).
    #[arg(long)]
    q: Option<String>,
    /// Per-party input count (matching-xor).
    #[arg(long)]
    x: Option<usize>,
    /// Network spec output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the target distribution as CSV.
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(Args)]
struct CompressArgs {
    /// Network spec to read.
    #[arg(long)]
    net: PathBuf,
    /// Source id, or comma-separated ids for sequential compression.
    #[arg(long)]
    source: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-source sample counts; defaults to the Hoeffding bounds.
    #[arg(long)]
    n: Option<String>,
    /// Tolerance split across sources; defaults to an equal split.
    #[arg(long)]
    deltas: Option<String>,
    #[arg(long, default_value_t = 100)]
    max_attempts: u64,
    /// Compressed network spec output path.
    #[arg(long)]
    out: PathBuf,
    /// Report output path; defaults to the spec path with a .report.json suffix.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Correlated,
    Matching,
}

#[derive(Args)]
struct VerifyLowerArgs {
    /// Builtin target instead of a CSV file.
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    x: Option<usize>,
    /// Target distribution CSV (x,a,p rows).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Per-party alphabets as |X|x|A| pairs, e.g. 3x2,3x2.
    #[arg(long)]
    alphabets: Option<String>,
    /// Candidate source cardinality.
    #[arg(long)]
    m: Option<usize>,
    /// Search for the minimum feasible cardinality up to --m-max.
    #[arg(long)]
    min: bool,
    #[arg(long)]
    m_max: Option<usize>,
    /// Realization output path when feasible.
    #[arg(long, default_value = "realization.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    command: String,
    parameters: BTreeMap<String, String>,
    seed: u64,
    artifact_paths: Vec<String>,
    tool_version: String,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli, argv: &[String]) -> Result<ExitCode> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be >= 1");
        }
        // Ignore the error when a pool already exists (reruns).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match &cli.command {
        Command::Bounds(args) => cmd_bounds(args, argv),
        Command::Scenario(args) => cmd_scenario(args, argv),
        Command::Compress(args) => cmd_compress(args, argv),
        Command::VerifyLower(args) => cmd_verify_lower(args, argv),
        Command::Rerun(args) => cmd_rerun(args),
    }
}

// ---------------------------------------------------------------------------
// bounds

fn cmd_bounds(args: &BoundsArgs, argv: &[String]) -> Result<ExitCode> {
    if let Some(csv) = &args.csv {
        let figure = args
            .figure
            .ok_or_else(|| anyhow!("--csv requires --figure"))?;
        let xs = parse_f64_list(&args.xs)?;
        let kind = match figure {
            Figure::Cardinality => FigureKind::Cardinality {
                epsilon: args.eps.ok_or_else(|| anyhow!("cardinality figure requires --eps"))?,
            },
            Figure::Crossover => FigureKind::Crossover {
                pairs: parse_pairs(&args.pairs)?,
            },
        };
        let table = emit_figure_data(&kind, &xs)?;
        let mut buffer = Vec::new();
        table.write_csv(&mut buffer)?;
        fs::write(csv, &buffer).with_context(|| format!("writing {}", csv.display()))?;
        write_manifest(argv, std::slice::from_ref(csv), 0)?;
        return Ok(ExitCode::SUCCESS);
    }

    let need = |opt: Option<u64>, name: &str| opt.ok_or_else(|| anyhow!("missing --{name}"));
    let need_eps = || args.eps.ok_or_else(|| anyhow!("missing --eps"));
    match args.mode {
        BoundMode::Single => {
            let n = single_source_bound(need(args.x, "x")?, need(args.a, "a")?, need_eps()?)?;
            println!("{n}");
        }
        BoundMode::Multi => {
            let deltas = args
                .deltas
                .as_deref()
                .ok_or_else(|| anyhow!("missing --deltas"))?;
            let split = DeltaSplit::new(parse_f64_list(deltas)?)?;
            let ns =
                multi_source_bound(need(args.x, "x")?, need(args.a, "a")?, need_eps()?, &split)?;
            let rendered: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
            println!("{}", rendered.join(","));
        }
        BoundMode::General => {
            let n = general_equal_split_bound(
                need(args.h, "h")?,
                need(args.xa, "xa")?,
                need(args.m, "m")?,
                need_eps()?,
            )?;
            println!("{n}");
        }
        BoundMode::Exact => {
            let n = exact_bound(need(args.h, "h")?, need(args.xa, "xa")?)?;
            println!("{n}");
        }
        BoundMode::Crossover => {
            let eps = crossover_epsilon(
                need(args.h, "h")?,
                need(args.m, "m")?,
                need(args.xa, "xa")?,
            );
            println!("{eps}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// scenario

fn cmd_scenario(args: &ScenarioArgs, argv: &[String]) -> Result<ExitCode> {
    let (net, target) = match args.name {
        ScenarioName::Correlated => {
            let h = args.h.ok_or_else(|| anyhow!("missing --h"))?;
            let q = parse_pmf(args.q.as_deref().ok_or_else(|| anyhow!("missing --q"))?)?;
            let (net, target) = build_correlated_no_input(h, &q)?;
            (net, target)
        }
        ScenarioName::MatchingXor => {
            let x = args.x.ok_or_else(|| anyhow!("missing --x"))?;
            let net = xor_strategy_network(x)?;
            (net, target_matching_distribution(x))
        }
    };
    fs::write(&args.out, network_to_json(&net))
        .with_context(|| format!("writing {}", args.out.display()))?;
    let mut artifacts = vec![args.out.clone()];
    if let Some(path) = &args.target {
        let mut buffer = Vec::new();
        distribution_to_csv(&target, &mut buffer)?;
        fs::write(path, &buffer).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(path.clone());
    }
    write_manifest(argv, &artifacts, 0)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// compress

fn cmd_compress(args: &CompressArgs, argv: &[String]) -> Result<ExitCode> {
    let json = fs::read_to_string(&args.net)
        .with_context(|| format!("reading {}", args.net.display()))?;
    let net = network_from_json(&json)?;
    let ids: Vec<String> = args.source.split(',').map(|s| s.trim().to_string()).collect();
    let ns = args.n.as_deref().map(parse_u64_list).transpose()?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| suffixed(&args.out, "report.json"));

    let outcome: Result<(ValidatedNetwork, Vec<CompressionReport>), CompressError> =
        if ids.len() == 1 {
            let n = match &ns {
                Some(list) if list.len() == 1 => list[0],
                Some(_) => bail!("--n must list one value per source"),
                None => {
                    single_source_bound(net.input_size() as u64, net.output_size() as u64, args.eps)?
                }
            };
            let cfg = CompressionConfig {
                epsilon: args.eps,
                n,
                max_attempts: args.max_attempts,
                seed: args.seed,
            };
            compress_single(&net, &ids[0], &cfg).map(|(net, rep)| (net, vec![rep]))
        } else {
            let split = match args.deltas.as_deref() {
                Some(deltas) => DeltaSplit::new(parse_f64_list(deltas)?)
                    .map_err(|e| anyhow!("bad --deltas: {e}"))?,
                None => DeltaSplit::equal(ids.len()),
            };
            compress_many(
                &net,
                &ids,
                args.eps,
                &split,
                ns.as_deref(),
                args.seed,
                args.max_attempts,
            )
        };

    match outcome {
        Ok((compressed, reports)) => {
            fs::write(&args.out, network_to_json(&compressed))
                .with_context(|| format!("writing {}", args.out.display()))?;
            fs::write(&report_path, serde_json::to_string_pretty(&reports)?)?;
            write_manifest(argv, &[args.out.clone(), report_path], args.seed)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(CompressError::AttemptsExhausted {
            source_id,
            best_deviation,
            attempts,
            epsilon,
        }) => {
            let failure = serde_json::json!({
                "source_id": source_id,
                "best_deviation": best_deviation,
                "attempts": attempts,
                "epsilon": epsilon,
            });
            fs::write(&report_path, serde_json::to_string_pretty(&failure)?)?;
            write_manifest(argv, &[report_path], args.seed)?;
            eprintln!(
                "attempts exhausted on {source_id}: best deviation {best_deviation} after {attempts} attempts (eps {epsilon})"
            );
            Ok(ExitCode::from(1))
        }
        Err(err) => Err(err.into()),
    }
}

// ---------------------------------------------------------------------------
// verify-lower

fn cmd_verify_lower(args: &VerifyLowerArgs, argv: &[String]) -> Result<ExitCode> {
    let (target, alphabets) = match args.builtin {
        Some(Builtin::Correlated) => {
            let h = args.h.ok_or_else(|| anyhow!("missing --h"))?;
            let q = parse_pmf(args.q.as_deref().ok_or_else(|| anyhow!("missing --q"))?)?;
            let (_, target) = build_correlated_no_input(h, &q)?;
            let alphabets = vec![(1usize, q.len()); h];
            (target, alphabets)
        }
        Some(Builtin::Matching) => {
            let x = args.x.ok_or_else(|| anyhow!("missing --x"))?;
            (target_matching_distribution(x), vec![(x, 2usize); 2])
        }
        None => {
            let path = args
                .target
                .as_ref()
                .ok_or_else(|| anyhow!("need --builtin or --target"))?;
            let alphabets = parse_alphabets(
                args.alphabets
                    .as_deref()
                    .ok_or_else(|| anyhow!("--target requires --alphabets"))?,
            )?;
            let csv = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            (parse_distribution_csv(&csv)?, alphabets)
        }
    };

    let cap = search_cap()?;
    if args.min {
        let m_max = args.m_max.ok_or_else(|| anyhow!("--min requires --m-max"))?;
        return match min_cardinality(&target, &alphabets, m_max, cap)? {
            Some(m) => {
                println!("{m}");
                write_manifest(argv, &[], 0)?;
                Ok(ExitCode::SUCCESS)
            }
            None => {
                println!("INFEASIBLE");
                Ok(ExitCode::from(1))
            }
        };
    }

    let m = args.m.ok_or_else(|| anyhow!("missing --m"))?;
    let problem = FeasibilityProblem::new(target, alphabets, m)?;
    match deterministic_feasible(&problem, cap)? {
        Some(realization) => {
            fs::write(&args.out, serde_json::to_string_pretty(&realization)?)
                .with_context(|| format!("writing {}", args.out.display()))?;
            write_manifest(argv, std::slice::from_ref(&args.out), 0)?;
            println!("FEASIBLE {}", args.out.display());
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("INFEASIBLE");
            Ok(ExitCode::from(1))
        }
    }
}

fn search_cap() -> Result<u128> {
    match std::env::var("RANDCOMP_SEARCH_CAP") {
        Ok(raw) => raw
            .parse::<u128>()
            .map_err(|_| anyhow!("RANDCOMP_SEARCH_CAP must be an integer, got {raw:?}")),
        Err(_) => Ok(DEFAULT_SEARCH_CAP),
    }
}

// ---------------------------------------------------------------------------
// rerun

fn cmd_rerun(args: &RerunArgs) -> Result<ExitCode> {
    let json = fs::read_to_string(&args.manifest)
        .with_context(|| format!("reading {}", args.manifest.display()))?;
    let manifest: RunManifest = serde_json::from_str(&json)?;
    let mut argv = vec!["randcomp".to_string(), manifest.command.clone()];
    for (key, value) in &manifest.parameters {
        argv.push(format!("--{key}"));
        if value != "true" {
            argv.push(value.clone());
        }
    }
    let cli = Cli::try_parse_from(&argv)?;
    run(&cli, &argv)
}

// ---------------------------------------------------------------------------
// manifest plumbing

/// Writes a manifest next to the first artifact; no-op for print-only runs.
fn write_manifest(argv: &[String], artifacts: &[PathBuf], seed: u64) -> Result<()> {
    let Some(first) = artifacts.first() else {
        return Ok(());
    };
    let (command, parameters) = split_argv(argv);
    let manifest = RunManifest {
        command,
        parameters,
        seed,
        artifact_paths: artifacts.iter().map(|p| p.display().to_string()).collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = suffixed(first, "manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Splits raw argv into the subcommand name and a flag map. Bare flags map
/// to "true".
fn split_argv(argv: &[String]) -> (String, BTreeMap<String, String>) {
    let mut command = String::new();
    let mut parameters = BTreeMap::new();
    let mut iter = argv.iter().skip(1).peekable();
    while let Some(arg) = iter.next() {
        if let Some(flag) = arg.strip_prefix("--") {
            let value = match iter.peek() {
                Some(next) if !next.starts_with("--") => iter.next().unwrap().clone(),
                _ => "true".to_string(),
            };
            parameters.insert(flag.to_string(), value);
        } else if command.is_empty() {
            command = arg.clone();
        }
    }
    (command, parameters)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}"))
}

// ---------------------------------------------------------------------------
// parsers

fn parse_f64_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| anyhow!("bad number {s:?}")))
        .collect()
}

fn parse_u64_list(raw: &str) -> Result<Vec<u64>> {
    raw.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| anyhow!("bad integer {s:?}")))
        .collect()
}

/// `uniform:K` or a comma-separated weight list.
fn parse_pmf(raw: &str) -> Result<FinitePmf> {
    if let Some(k) = raw.strip_prefix("uniform:") {
        let k: usize = k.parse().map_err(|_| anyhow!("bad cardinality {k:?}"))?;
        if k == 0 {
            bail!("cardinality must be >= 1");
        }
        return Ok(FinitePmf::uniform(k));
    }
    Ok(FinitePmf::new(parse_f64_list(raw)?)?)
}

/// `3x2,3x2` style per-party alphabet pairs.
fn parse_alphabets(raw: &str) -> Result<Vec<(usize, usize)>> {
    raw.split(',')
        .map(|pair| {
            let (x, a) = pair
                .trim()
                .split_once('x')
                .ok_or_else(|| anyhow!("bad alphabet pair {pair:?}, expected |X|x|A|"))?;
            Ok((
                x.parse().map_err(|_| anyhow!("bad input size {x:?}"))?,
                a.parse().map_err(|_| anyhow!("bad output size {a:?}"))?,
            ))
        })
        .collect()
}

/// `h:m` pairs for the crossover figure.
fn parse_pairs(raw: &str) -> Result<Vec<(u64, u64)>> {
    raw.split(',')
        .map(|pair| {
            let (h, m) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| anyhow!("bad pair {pair:?}, expected h:m"))?;
            Ok((
                h.parse().map_err(|_| anyhow!("bad h {h:?}"))?,
                m.parse().map_err(|_| anyhow!("bad m {m:?}"))?,
            ))
        })
        .collect()
}

/// Reads the `x,a,p` CSV format back into a dense conditional distribution.
fn parse_distribution_csv(csv: &str) -> Result<ConditionalDistribution> {
    let mut entries = Vec::new();
    let mut x_max = 0usize;
    let mut a_max = 0usize;
    for (number, line) in csv.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (number == 0 && line.starts_with("x,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("line {}: expected x,a,p", number + 1);
        }
        let x: usize = fields[0].parse().map_err(|_| anyhow!("line {}: bad x", number + 1))?;
        let a: usize = fields[1].parse().map_err(|_| anyhow!("line {}: bad a", number + 1))?;
        let p: f64 = fields[2].parse().map_err(|_| anyhow!("line {}: bad p", number + 1))?;
        x_max = x_max.max(x);
        a_max = a_max.max(a);
        entries.push((x, a, p));
    }
    if entries.is_empty() {
        bail!("no data rows");
    }
    let mut rows = vec![vec![0.0f64; a_max + 1]; x_max + 1];
    for (x, a, p) in entries {
        rows[x][a] = p;
    }
    Ok(ConditionalDistribution::from_raw_rows(rows)?)
}
