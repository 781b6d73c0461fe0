//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use serde_json::json;

use crate::config::parse_config;
use crate::engine::{run_simulation, SimRng, RNG_ALGORITHM};
use crate::model::{Belief, CensorshipMode, SimParams};
use crate::netgen::{generate_small_world, small_worldness, MIN_BASELINES};
use crate::output::{
    correlation_csv, format_real, key_value_text, pairwise_csv, parse_sweep_csv, run_csv,
    sweep_csv, verify_manifest, OutputDir, RunManifest, SweepRecord,
};
use crate::stats::{
    correlation_matrix, kruskal_wallis_with_posthoc, median, CorrelationMethod, GroupedSample,
};
use crate::sweep::{
    default_ranges, derive_run_seed, run_sweep, ParamRange, SweepDesign, SweptParam,
};

pub const ARTIFACT_VERSION: &str = concat!("censorsim ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "censorsim",
    version,
    about = "Belief dynamics under censorship regimes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a single simulation.
    Run(RunArgs),
    /// Run a Latin Hypercube batch, each sample under all three modes.
    Sweep(SweepArgs),
    /// Kruskal-Wallis, Dunn and correlations over a sweep CSV.
    Stats(StatsArgs),
    /// Report small-world-ness of generated networks.
    ValidateNetwork(ValidateArgs),
    /// Recompute the digests listed in an output directory's manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON parameter file; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON parameter file for the fixed parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also sample radical_fraction over [0, 1).
    #[arg(long)]
    pub sweep_radical_fraction: bool,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Certainty,
    Dissent,
    Assent,
    Divergence,
    Degree,
}

impl Metric {
    fn column(self) -> &'static str {
        match self {
            Metric::Certainty => "mean_certainty",
            Metric::Dissent => "mean_dissent",
            Metric::Assent => "mean_assent",
            Metric::Divergence => "mean_divergence",
            Metric::Degree => "mean_degree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Spearman,
    Pearson,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Sweep CSV produced by `sweep`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub belief: u8,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Method::Spearman)]
    pub method: Method,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of generated networks to average over.
    #[arg(long, default_value_t = 30)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random baseline graphs per network.
    #[arg(long, default_value_t = MIN_BASELINES)]
    pub baselines: usize,
    /// Optional output directory for the per-network table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub dir: PathBuf,
}

type CmdResult = Result<(), String>;

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Stats(a) => cmd_stats(a),
        Command::ValidateNetwork(a) => cmd_validate(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn load_params(config: Option<&Path>) -> Result<SimParams, String> {
    match config {
        Some(path) => parse_config(path).map_err(|e| e.to_string()),
        None => Ok(SimParams::default()),
    }
}

fn manifest(
    command: &str,
    resolved: serde_json::Value,
    base_seed: Option<u64>,
    started_at: String,
) -> RunManifest {
    RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        rng_algorithm: RNG_ALGORITHM.into(),
        command: command.into(),
        resolved,
        base_seed,
        started_at,
        finished_at: now(),
        notes: Default::default(),
        files: Vec::new(),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let started_at = now();
    let mut params = load_params(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        params.seed = seed;
    }
    let result = run_simulation(&params).map_err(|e| e.to_string())?;
    // The initial network is regenerated from the same seed.
    let initial = crate::engine::init_simulation(&params).map_err(|e| e.to_string())?;

    let mut out = OutputDir::prepare(&a.out, a.force).map_err(|e| e.to_string())?;
    let e = |e: crate::output::OutputError| e.to_string();
    out.write("run.csv", run_csv(&result).as_bytes())
        .map_err(e)?;
    out.write("network.edgelist", initial.graph.to_edge_list().as_bytes())
        .map_err(e)?;
    out.finish(manifest(
        "run",
        to_json(&params),
        Some(params.seed),
        started_at,
    ))
    .map_err(e)?;
    println!(
        "wrote {} rows to {}",
        result.rows.len(),
        a.out.join("run.csv").display()
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let started_at = now();
    let template = load_params(a.config.as_deref())?;
    let mut ranges = default_ranges();
    if a.sweep_radical_fraction {
        ranges.push(
            ParamRange::new(SweptParam::RadicalFraction, 0.0, 1.0).map_err(|e| e.to_string())?,
        );
    }
    let design =
        SweepDesign::latin_hypercube(ranges, a.samples, a.seed, true).map_err(|e| e.to_string())?;
    let mut out = OutputDir::prepare(&a.out, a.force).map_err(|e| e.to_string())?;
    let clock = Instant::now();
    let result = run_sweep(&design, &template, a.jobs).map_err(|e| e.to_string())?;
    let wall = clock.elapsed();

    let failed = result.records.iter().filter(|r| r.outcome.is_err()).count();
    out.write("sweep.csv", sweep_csv(&result).as_bytes())
        .map_err(|e| e.to_string())?;
    let mut m = manifest(
        "sweep",
        json!({ "template": to_json(&template), "design": to_json(&design) }),
        Some(a.seed),
        started_at,
    );
    m.notes.insert("jobs".into(), json!(a.jobs));
    m.notes.insert("runs".into(), json!(result.records.len()));
    m.notes.insert("failed_runs".into(), json!(failed));
    m.notes
        .insert("wall_seconds".into(), json!(wall.as_secs_f64()));
    m.notes.insert(
        "cpu_seconds".into(),
        json!(result.total_duration().as_secs_f64()),
    );
    out.finish(m).map_err(|e| e.to_string())?;
    println!(
        "{} runs ({} failed) in {:.2}s -> {}",
        result.records.len(),
        failed,
        wall.as_secs_f64(),
        a.out.join("sweep.csv").display()
    );
    Ok(())
}

/// Metric value of one group row, by column name.
fn metric_value(rec: &SweepRecord, belief: Belief, column: &str) -> Option<f64> {
    let row = &rec.final_rows.as_ref()?[belief.index()];
    match column {
        "mean_assent" => row.mean_assent,
        "mean_dissent" => row.mean_dissent,
        "mean_divergence" => row.mean_divergence,
        "mean_degree" => row.mean_degree,
        "mean_certainty" => row.mean_certainty,
        _ => None,
    }
}

const CORRELATION_METRICS: [&str; 5] = [
    "mean_assent",
    "mean_dissent",
    "mean_divergence",
    "mean_degree",
    "mean_certainty",
];

fn cmd_stats(a: StatsArgs) -> CmdResult {
    let started_at = now();
    let text = std::fs::read_to_string(&a.input)
        .map_err(|e| format!("cannot read {}: {e}", a.input.display()))?;
    let records = parse_sweep_csv(&text).map_err(|e| format!("{}: {e}", a.input.display()))?;
    let belief = Belief::try_from(a.belief)?;
    let column = a.metric.column();

    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for mode in CensorshipMode::ALL {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.mode() == mode)
            .filter_map(|r| metric_value(r, belief, column))
            .collect();
        if !values.is_empty() {
            groups.push((mode.to_string(), values));
        }
    }
    let samples = GroupedSample::new(groups);
    let report = kruskal_wallis_with_posthoc(&samples, a.alpha).map_err(|e| e.to_string())?;

    let mut kv: Vec<(&str, String)> = vec![
        ("metric", column.to_string()),
        ("belief", belief.to_string()),
        ("alpha", format_real(a.alpha)),
        ("n_groups", samples.groups.len().to_string()),
        ("n_total", samples.total().to_string()),
        ("h_statistic", format_real(report.statistic)),
        ("degrees_of_freedom", report.degrees_of_freedom.to_string()),
        ("p_value", format_real(report.p_value)),
        ("significant", (report.p_value < a.alpha).to_string()),
    ];
    let medians: Vec<(String, String)> = samples
        .groups
        .iter()
        .map(|(name, v)| {
            (
                format!("median_{name}"),
                median(v).map(format_real).unwrap_or_default(),
            )
        })
        .collect();
    let counts: Vec<(String, String)> = samples
        .groups
        .iter()
        .map(|(name, v)| (format!("n_{name}"), v.len().to_string()))
        .collect();
    for (k, v) in counts.iter().chain(&medians) {
        kv.push((k.as_str(), v.clone()));
    }

    // Correlations over runs where every column is defined.
    let mut columns: Vec<(String, Vec<f64>)> = ["homophily", "tolerance", "radical_fraction"]
        .iter()
        .chain(&CORRELATION_METRICS)
        .map(|n| (n.to_string(), Vec::new()))
        .collect();
    for r in &records {
        let metrics: Option<Vec<f64>> = CORRELATION_METRICS
            .iter()
            .map(|c| metric_value(r, belief, c))
            .collect();
        let Some(metrics) = metrics else { continue };
        let p = &r.params;
        for (col, v) in columns.iter_mut().zip(
            [p.homophily, p.tolerance, p.radical_fraction]
                .into_iter()
                .chain(metrics),
        ) {
            col.1.push(v);
        }
    }
    let method = match a.method {
        Method::Spearman => CorrelationMethod::Spearman,
        Method::Pearson => CorrelationMethod::Pearson,
    };
    let correlations = correlation_matrix(&columns, method).map_err(|e| e.to_string())?;

    let mut out = OutputDir::prepare(&a.out, a.force).map_err(|e| e.to_string())?;
    let e = |e: crate::output::OutputError| e.to_string();
    out.write("kruskal_wallis.txt", key_value_text(&kv).as_bytes())
        .map_err(e)?;
    let pairs = report.pairwise.clone().unwrap_or_default();
    out.write("pairwise.csv", pairwise_csv(&pairs).as_bytes())
        .map_err(e)?;
    out.write("correlation.csv", correlation_csv(&correlations).as_bytes())
        .map_err(e)?;
    let mut m = manifest(
        "stats",
        json!({
            "input": a.input.display().to_string(),
            "metric": column,
            "belief": a.belief,
            "alpha": a.alpha,
            "method": format!("{method:?}").to_lowercase(),
        }),
        None,
        started_at,
    );
    m.notes.insert(
        "input_sha256".into(),
        json!(crate::output::sha256_hex(text.as_bytes())),
    );
    out.finish(m).map_err(e)?;

    println!(
        "{column}, belief {belief}: H = {}, p = {}",
        format_real(report.statistic),
        format_real(report.p_value)
    );
    for p in &pairs {
        println!(
            "  {} vs {}: z = {}, p_adj = {}{}",
            p.group_a,
            p.group_b,
            format_real(p.z),
            format_real(p.p_adjusted),
            if p.significant { " *" } else { "" }
        );
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CmdResult {
    let started_at = now();
    let params = load_params(a.config.as_deref())?;
    if a.seeds == 0 {
        return Err("--seeds must be at least 1".into());
    }
    let mut table = String::from(
        "seed,clustering,mean_path_length,random_clustering,random_path_length,sigma\n",
    );
    let mut sigma_sum = 0.0;
    for i in 0..a.seeds {
        let seed = derive_run_seed(a.seed, i);
        let mut rng = SimRng::seed_from_u64(seed);
        let g = generate_small_world(
            params.n_agents,
            params.k_neighbors,
            params.rewire_prob,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
        let s = small_worldness(&g, &mut rng, a.baselines).map_err(|e| e.to_string())?;
        sigma_sum += s.sigma;
        table.push_str(&format!(
            "{seed},{},{},{},{},{}\n",
            format_real(s.clustering),
            format_real(s.mean_path_length),
            format_real(s.random_clustering),
            format_real(s.random_path_length),
            format_real(s.sigma)
        ));
    }
    let mean_sigma = sigma_sum / a.seeds as f64;
    if let Some(dir) = &a.out {
        let mut out = OutputDir::prepare(dir, a.force).map_err(|e| e.to_string())?;
        out.write("networks.csv", table.as_bytes())
            .map_err(|e| e.to_string())?;
        let mut m = manifest(
            "validate-network",
            json!({ "params": to_json(&params), "seeds": a.seeds, "baselines": a.baselines }),
            Some(a.seed),
            started_at,
        );
        m.notes.insert("mean_sigma".into(), json!(mean_sigma));
        out.finish(m).map_err(|e| e.to_string())?;
    }
    println!(
        "n={} k={} beta={} networks={} mean_sigma={} small_world={}",
        params.n_agents,
        params.k_neighbors,
        format_real(params.rewire_prob),
        a.seeds,
        format_real(mean_sigma),
        mean_sigma > 1.0
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let problems = verify_manifest(&a.dir).map_err(|e| e.to_string())?;
    if problems.is_empty() {
        println!("ok: all digests match");
        Ok(())
    } else {
        Err(problems.join("\n"))
    }
}
