//! The `cbl` command line.
//!
//! Every command resolves a [`ScenarioConfig`] (file values over defaults,
//! then flag overrides), builds the scenario (synthetic, or `--dataset`),
//! and writes its artifacts plus a `manifest.json` into `--out`. Outputs are
//! assembled in a staging directory next to `--out` and moved into place
//! only when the command succeeds, so a failed run leaves nothing behind.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::audit::{run_theory_audit, AuditSizes};
use crate::codebook::{beamsteering_codebook, Codebook, PhaseSet};
use crate::config::{parse_config, PolicyKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::eval::{export_patterns, gamma_grid, objective_value, roc_curve, sir_map_two_bs};
use crate::orchestrator::run::stream_rng;
use crate::orchestrator::{cluster_all, run_decentralized_learning, InterfererPolicy, OrchestrationSchedule};
use crate::scenario::{generate_two_bs_scenario, load_channel_dataset, save_channel_dataset, Scenario};

/// RNG streams for commands that do not train; training uses its own
/// per-agent streams.
const ROC_STREAM: u64 = 0xA0C;
const AUDIT_STREAM: u64 = 0xA0D;

/// Measurement counts every `roc` run sweeps, besides the configured one.
const ROC_SWEEP: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Parser)]
#[command(name = "cbl", version, about = "Decentralized interference-aware beam codebook learning")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat TOML run config; omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created; existing files with the same names are replaced).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Interferer behaviour while training.
    #[arg(long, global = true, value_parser = ["random", "dft", "colearn"])]
    pub policy: Option<String>,
    #[arg(long, global = true)]
    pub p_measurements: Option<usize>,
    #[arg(long, global = true)]
    pub q_measurements: Option<usize>,
    /// Channel dataset JSON to use instead of the synthetic scenario.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic scenario and save it as a channel dataset.
    Synth,
    /// Cluster each cell's users.
    Cluster,
    /// Learn a codebook at every BS.
    Train,
    /// SIR map and rates for a pair of codebooks (beamsteering by default).
    EvalSir {
        /// Directory holding `codebook_bs0.csv` and `codebook_bs1.csv`.
        #[arg(long)]
        codebooks: Option<PathBuf>,
    },
    /// ROC of the interference ranking test.
    Roc {
        /// Receiving BS.
        #[arg(long, default_value_t = 0)]
        bs: usize,
        #[arg(long)]
        trials: Option<usize>,
        /// What the interfering BS transmits during the test.
        #[arg(long, value_parser = ["random", "dft"], default_value = "random")]
        interferer: String,
    },
    /// Beam patterns with null depth toward the interfering BS.
    Pattern {
        /// Directory holding `codebook_bs{k}.csv` files.
        #[arg(long)]
        codebooks: Option<PathBuf>,
    },
    /// Randomized checks of the path-space closed form and bounds.
    TheoryAudit,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Cluster => "cluster",
            Command::Train => "train",
            Command::EvalSir { .. } => "eval-sir",
            Command::Roc { .. } => "roc",
            Command::Pattern { .. } => "pattern",
            Command::TheoryAudit => "theory-audit",
        }
    }
}

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e.fmt(f),
        }
    }
}

fn parse_policy(s: &str) -> PolicyKind {
    match s {
        "random" => PolicyKind::Random,
        "dft" => PolicyKind::Dft,
        _ => PolicyKind::Colearn,
    }
}

/// Config file (or defaults) with the command-line overrides applied.
pub fn resolve_config(args: &CommonArgs, command: &Command) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(path).map_err(|e| match e {
            Error::Io(io) => Error::Config { line: None, msg: format!("{}: {io}", path.display()) },
            e => e,
        })?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &args.policy {
        cfg.policy = parse_policy(p);
    }
    if let Some(p) = args.p_measurements {
        cfg.p_measurements = p;
    }
    if let Some(q) = args.q_measurements {
        cfg.q_measurements = q;
    }
    if let Command::Roc { trials: Some(t), .. } = command {
        cfg.roc_trials = *t;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    scenario_source: String,
    config: &'a ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<OrchestrationSchedule>,
    outputs: Vec<String>,
    summary: serde_json::Value,
}

/// What a command produced, before the manifest is added.
struct Produced {
    outputs: Vec<String>,
    schedule: Option<OrchestrationSchedule>,
    summary: serde_json::Value,
}

fn csv_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load_scenario(cfg: &ScenarioConfig, dataset: Option<&Path>) -> Result<Scenario<f64>> {
    match dataset {
        Some(path) => load_channel_dataset(path),
        None => generate_two_bs_scenario(cfg),
    }
}

fn load_codebooks(dir: Option<&Path>, scenario: &Scenario<f64>, cfg: &ScenarioConfig) -> Result<Vec<Codebook<f64>>> {
    let ps = PhaseSet::new(cfg.r)?;
    (0..scenario.bs_count())
        .map(|k| match dir {
            Some(d) => {
                let cb = Codebook::load_csv(&d.join(format!("codebook_bs{k}.csv")), ps)?;
                if cb.num_antennas() != scenario.num_antennas() {
                    return Err(Error::DimensionMismatch { expected: scenario.num_antennas(), actual: cb.num_antennas() });
                }
                Ok(cb)
            }
            None => beamsteering_codebook(&scenario.geometry, cfg.n, ps),
        })
        .collect()
}

fn execute(command: &Command, cfg: &ScenarioConfig, common: &CommonArgs, dir: &Path) -> Result<Produced> {
    let scenario = load_scenario(cfg, common.dataset.as_deref())?;
    let mut outputs = Vec::new();
    let mut schedule = None;
    let summary = match command {
        Command::Synth => {
            save_channel_dataset(&scenario, &dir.join("scenario.json"))?;
            outputs.push("scenario.json".into());
            json!({
                "users_per_bs": (0..scenario.bs_count()).map(|k| scenario.cell(k).users.len()).collect::<Vec<_>>(),
            })
        }
        Command::Cluster => {
            let clusters = cluster_all(&scenario, cfg)?;
            write_clusters(&scenario, &clusters, dir)?;
            outputs.push("clusters.csv".into());
            json!({ "clusters_per_bs": clusters.iter().map(Vec::len).collect::<Vec<_>>() })
        }
        Command::Train => {
            let outcome = run_decentralized_learning(&scenario, cfg)?;
            write_clusters(&scenario, &outcome.clusters, dir)?;
            outputs.push("clusters.csv".into());
            for (k, cb) in outcome.codebooks.iter().enumerate() {
                let name = format!("codebook_bs{k}.csv");
                cb.write_csv(csv_file(dir, &name)?)?;
                outputs.push(name);
                let name = format!("initial_codebook_bs{k}.csv");
                outcome.initial_codebooks[k].write_csv(csv_file(dir, &name)?)?;
                outputs.push(name);
                let name = format!("training_log_bs{k}.csv");
                let mut w = csv::Writer::from_writer(csv_file(dir, &name)?);
                for row in &outcome.logs[k] {
                    w.serialize(row)?;
                }
                w.flush()?;
                outputs.push(name);
            }
            schedule = Some(outcome.schedule.clone());
            json!({ "cross_bs_violations": outcome.cross_bs_violations })
        }
        Command::EvalSir { codebooks } => {
            let cbs = load_codebooks(codebooks.as_deref(), &scenario, cfg)?;
            let report = sir_map_two_bs(&cbs, &scenario, cfg.sir_cap_db)?;
            report.write_csv(csv_file(dir, "sir_map.csv")?)?;
            outputs.push("sir_map.csv".into());
            let px = 10f64.powf(cfg.snr_db / 10.0);
            let rates = objective_value(&cbs, &scenario, px, 1.0)?;
            let mut w = csv::Writer::from_writer(csv_file(dir, "rates.csv")?);
            w.write_record(["user_id", "rate_bps_hz"])?;
            for r in &rates.per_user {
                w.write_record([r.user_id.to_string(), r.rate_bps_hz.to_string()])?;
            }
            w.flush()?;
            outputs.push("rates.csv".into());
            json!({
                "median_avg_sir_db": report.median_avg_db(),
                "median_min_sir_db": report.median_min_db(),
                "objective_bps_hz": rates.objective,
            })
        }
        Command::Roc { bs, interferer, .. } => {
            if *bs >= scenario.bs_count() {
                return Err(Error::InvalidParameter(format!("no BS {bs} in a {}-BS scenario", scenario.bs_count())));
            }
            let ps = PhaseSet::new(cfg.r)?;
            let policy = match interferer.as_str() {
                "dft" => InterfererPolicy::FixedCodebookSweep(Arc::new(beamsteering_codebook(&scenario.geometry, cfg.n, ps)?)),
                _ => InterfererPolicy::RandomBeam { m: scenario.num_antennas(), phase_set: ps },
            };
            let gammas = gamma_grid(cfg.roc_gamma_points);
            let mut ps_list: Vec<usize> = ROC_SWEEP.to_vec();
            ps_list.push(cfg.p_measurements);
            ps_list.sort_unstable();
            ps_list.dedup();
            let mut w = csv::Writer::from_writer(csv_file(dir, "roc.csv")?);
            let mut aucs = Vec::new();
            for &p in &ps_list {
                // equal seeds per P: every curve is judged on the same beam pairs
                let mut rng = stream_rng(cfg.seed, ROC_STREAM);
                let curve = roc_curve(&scenario, *bs, &policy, p, &gammas, cfg.roc_trials, ps, &mut rng)?;
                for pt in &curve.points {
                    w.serialize(RocCsvRow { gamma: pt.gamma, tpr: pt.tpr, fpr: pt.fpr, trials: curve.trials, p_measurements: p })?;
                }
                let at = curve.at(cfg.gamma);
                aucs.push(json!({
                    "p_measurements": p,
                    "auc": curve.auc,
                    "tpr_at_gamma": at.map(|x| x.tpr),
                    "fpr_at_gamma": at.map(|x| x.fpr),
                }));
            }
            w.flush()?;
            outputs.push("roc.csv".into());
            json!({ "gamma": cfg.gamma, "interferer": interferer, "curves": aucs })
        }
        Command::Pattern { codebooks } => {
            let cbs = load_codebooks(codebooks.as_deref(), &scenario, cfg)?;
            let mut notes = Vec::new();
            for (k, cb) in cbs.iter().enumerate() {
                let sub = dir.join(format!("bs{k}"));
                fs::create_dir_all(&sub)?;
                let ann = export_patterns(cb, &scenario.geometry, scenario.interference_azimuth(k), cfg.pattern_points, &sub)?;
                outputs.push(format!("bs{k}/patterns.csv"));
                outputs.push(format!("bs{k}/pattern_annotations.csv"));
                notes.push(ann.iter().map(|a| a.null_depth_db).collect::<Vec<_>>());
            }
            json!({ "null_depth_db": notes })
        }
        Command::TheoryAudit => {
            let ps = PhaseSet::new(cfg.r)?;
            let mut rng = stream_rng(cfg.seed, AUDIT_STREAM);
            let sizes = AuditSizes { m: cfg.m, ..AuditSizes::default() };
            let audit = run_theory_audit::<f64>(sizes, ps, &mut rng)?;
            let mut w = csv::Writer::from_writer(csv_file(dir, "closed_form_vs_monte_carlo.csv")?);
            for row in &audit.monte_carlo {
                w.serialize(row)?;
            }
            w.flush()?;
            outputs.push("closed_form_vs_monte_carlo.csv".into());
            serde_json::to_writer_pretty(File::create(dir.join("theory_audit.json"))?, &audit)?;
            outputs.push("theory_audit.json".into());
            json!({
                "monte_carlo_max_rel_error": audit.monte_carlo_max_rel_error,
                "prop1_violations": audit.prop1.violations,
                "weyl_violations": audit.bounds.weyl_violations,
                "rayleigh_violations": audit.bounds.rayleigh_violations,
                "asymptotics": audit.asymptotics,
            })
        }
    };
    Ok(Produced { outputs, schedule, summary })
}

#[derive(Serialize)]
struct RocCsvRow {
    gamma: f64,
    tpr: f64,
    fpr: f64,
    trials: usize,
    p_measurements: usize,
}

fn write_clusters(scenario: &Scenario<f64>, clusters: &[Vec<crate::learning::UserCluster>], dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(csv_file(dir, "clusters.csv")?);
    w.write_record(["bs", "user_id", "cluster"])?;
    for (k, cs) in clusters.iter().enumerate() {
        for c in cs {
            for &i in &c.members {
                w.write_record([k.to_string(), scenario.cell(k).users[i].id.to_string(), c.id.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs `f` against a fresh staging directory and moves its contents into
/// `out` on success; on failure the staging directory is removed.
fn with_staging<R>(out: &Path, f: impl FnOnce(&Path) -> Result<R>) -> Result<R> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let result = f(&staging).and_then(|r| {
        fs::create_dir_all(out)?;
        for entry in fs::read_dir(&staging)? {
            let entry = entry?;
            let target = out.join(entry.file_name());
            if target.is_dir() {
                fs::remove_dir_all(&target)?;
            }
            fs::rename(entry.path(), target)?;
        }
        Ok(r)
    });
    let _ = fs::remove_dir_all(&staging);
    result
}

pub fn run_cli(cli: &Cli) -> std::result::Result<serde_json::Value, Failure> {
    let cfg = resolve_config(&cli.common, &cli.command).map_err(Failure::Config)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.common.workers {
            if n == 0 {
                return Err(Failure::Config(Error::Config { line: None, msg: "--workers must be positive".into() }));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Failure::Runtime(Error::InvalidParameter(e.to_string())))?
    };
    let name = cli.command.name();
    let source = match &cli.common.dataset {
        Some(p) => format!("dataset {}", p.display()),
        None => "synthetic".to_string(),
    };
    pool.install(|| {
        with_staging(&cli.common.out, |dir| {
            let produced = execute(&cli.command, &cfg, &cli.common, dir)?;
            let mut outputs = produced.outputs;
            outputs.push("manifest.json".into());
            let manifest = Manifest {
                command: name,
                seed: cfg.seed,
                scenario_source: source,
                config: &cfg,
                schedule: produced.schedule,
                outputs,
                summary: produced.summary.clone(),
            };
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            fs::write(dir.join("manifest.json"), text)?;
            Ok(produced.summary)
        })
    })
    .map_err(Failure::Runtime)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr, the summary to stdout.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_cli(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            0
        }
        Err(f) => {
            eprintln!("cbl {}: {f}", cli.command.name());
            f.exit_code()
        }
    }
}
