use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgAction, Args, Parser, Subcommand};
use frap_core::config::Config;
use frap_core::detection::{monitor_all, revision_trigger, MonitorReport};
use frap_core::ingest::{load_instance, read_edges, Instance};
use frap_core::metrics::MetricKind;
use frap_core::modeling::{load_model, save_model, BuildOutcome, Model};
use frap_core::pipeline::{learn, revise_with_instances};
use frap_core::synthgen::{builtin, builtin_scenarios, write_scenario, Scenario};

const EXIT_ANOMALY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "frap", version, about = "Provenance-based behavioral anomaly detection")]
struct Cli {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Default, Args)]
struct Overrides {
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    novelty_threshold: Option<usize>,
    #[arg(long, global = true)]
    hard_cap: Option<usize>,
    #[arg(long, global = true)]
    step: Option<usize>,
    /// kld, hellinger or euclidean.
    #[arg(long, global = true)]
    metric: Option<MetricKind>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    slack: Option<f64>,
    /// A distance, or `auto`.
    #[arg(long, global = true)]
    merge_tol: Option<String>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Consecutive anomalous windows before an instance alarm.
    #[arg(long, global = true)]
    consecutive: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size the window and build a model from instance files.
    Learn {
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to `<out>.report`.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
    },
    /// Monitor instance streams against a model; `-` reads standard input.
    Detect {
        #[arg(short, long)]
        model: PathBuf,
        /// Verdict file; standard output when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
    },
    /// Rebuild a model with operator-confirmed false positives.
    Revise {
        #[arg(short, long)]
        model: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Required: the listed instances are confirmed legitimate.
        #[arg(long)]
        confirm: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
    },
    /// Write a synthetic scenario (built-in name or TOML file).
    Gen {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Summarize a model file.
    Inspect { model: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(frap_core::Error),
}

impl From<frap_core::Error> for CliError {
    fn from(e: frap_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_data_error() => EXIT_DATA,
            CliError::Core(_) => EXIT_USAGE,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Core(frap_core::Error::Io {
        path: Some(path.to_path_buf()),
        source: e,
    })
}

fn effective_config(cli: &Cli) -> CliResult<Config> {
    let mut c = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.iterations {
        c.iterations = v;
    }
    if let Some(v) = o.novelty_threshold {
        c.novelty_threshold = v;
    }
    if let Some(v) = o.hard_cap {
        c.hard_cap = v;
    }
    if let Some(v) = o.step {
        c.step = v;
    }
    if let Some(v) = o.metric {
        c.metric = v;
    }
    if let Some(v) = o.epsilon {
        c.epsilon = v;
    }
    if let Some(v) = o.slack {
        c.slack = v;
    }
    if let Some(v) = &o.merge_tol {
        c.merge_tol = match v.as_str() {
            "auto" => None,
            s => Some(
                s.parse()
                    .map_err(|_| CliError::Usage(format!("merge tolerance `{s}` is not a number or `auto`")))?,
            ),
        };
    }
    if let Some(v) = o.theta {
        c.theta = v;
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.consecutive {
        c.consecutive = v;
    }
    c.validate()?;
    Ok(c)
}

fn load_instances(files: &[PathBuf]) -> CliResult<Vec<Instance>> {
    files
        .iter()
        .map(|path| {
            if path.as_os_str() == "-" {
                let edges = read_edges(io::stdin().lock())?;
                Ok(Instance {
                    name: "stdin".into(),
                    edges,
                })
            } else {
                Ok(load_instance(path)?)
            }
        })
        .collect()
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report");
    PathBuf::from(name)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn model_summary(model: &Model) -> String {
    let p = &model.params;
    let mut s = String::new();
    let _ = writeln!(s, "window_size = {}", p.window_size);
    let _ = writeln!(s, "step = {}", p.step);
    let _ = writeln!(s, "metric = {}", p.metric.kind);
    let _ = writeln!(s, "epsilon = {}", p.metric.epsilon);
    let _ = writeln!(s, "iterations = {}", p.iterations);
    let _ = writeln!(s, "slack = {}", p.slack);
    let _ = writeln!(s, "clusters = {}", model.clusters.len());
    for (i, c) in model.clusters.iter().enumerate() {
        let _ = writeln!(s, "cluster {i}: size {} radius {}", c.members.len(), c.radius);
    }
    let _ = writeln!(s, "vectors = {}", model.vectors.len());
    let _ = writeln!(s, "label_map = {}", model.label_map.len());
    s
}

fn build_report(title: &str, config: &Config, outcome: &BuildOutcome, extra: &str) -> String {
    let mut s = format!("# {title}\n\n[config]\n{}\n[model]\n", config.echo());
    s.push_str(&model_summary(&outcome.model));
    let _ = writeln!(s, "first_phase_k = {}", outcome.first_phase_k);
    s.push_str(extra);
    let _ = writeln!(s, "\n[retained]");
    for (i, v) in outcome.model.vectors.iter().enumerate() {
        let cluster = outcome.model.cluster_of(i).map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(s, "{} cluster {cluster}", v.instance_id);
    }
    let _ = writeln!(s, "\n[discarded]");
    for d in &outcome.discarded {
        let _ = writeln!(s, "{} window {} isolated in cluster {}", d.instance_id, d.window_index, d.cluster);
    }
    s
}

fn cmd_learn(config: &Config, out: &Path, report: Option<&Path>, files: &[PathBuf]) -> CliResult<u8> {
    let instances = load_instances(files)?;
    let learned = learn(&instances, config)?;
    save_model(&learned.outcome.model, out)?;
    let mut extra = String::new();
    for (name, w) in &learned.instance_sizes {
        let _ = writeln!(extra, "declared_size {name} = {w}");
    }
    let text = build_report("learning report", config, &learned.outcome, &extra);
    let report_path = report.map_or_else(|| sidecar(out), Path::to_path_buf);
    write_file(&report_path, &text)?;

    let discarded: Vec<&str> = learned
        .outcome
        .discarded
        .iter()
        .map(|d| d.instance_id.as_str())
        .collect();
    println!(
        "window {} | clusters {} | retained {} | discarded {}",
        learned.window_size,
        learned.outcome.model.clusters.len(),
        learned.outcome.model.vectors.len(),
        if discarded.is_empty() { "none".to_string() } else { discarded.join(" ") }
    );
    Ok(0)
}

fn cmd_detect(
    config: &Config,
    overrides: &Overrides,
    model_path: &Path,
    out: Option<&Path>,
    report: Option<&Path>,
    files: &[PathBuf],
) -> CliResult<u8> {
    let mut model = load_model(model_path)?;
    if let Some(step) = overrides.step {
        model.params.step = step;
    }
    let model = Arc::new(model);
    let instances = load_instances(files)?;
    let reports: Vec<MonitorReport> = monitor_all(model, &instances, config.consecutive)?;

    let mut lines = String::new();
    for r in &reports {
        for v in &r.verdicts {
            let _ = writeln!(lines, "{v}");
        }
    }
    match out {
        Some(path) => write_file(path, &lines)?,
        None => io::stdout()
            .write_all(lines.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e))?,
    }

    let all: Vec<_> = reports.iter().flat_map(|r| r.verdicts.iter().cloned()).collect();
    let trigger = revision_trigger(&all, config.theta);
    for r in reports.iter().filter(|r| r.alarm) {
        eprintln!("alarm: {} ({} anomalous windows)", r.instance_id, r.anomalies());
    }
    if trigger {
        log::warn!(
            "more than {} of monitored instances were anomalous; the model may need revision",
            config.theta
        );
    }
    if let Some(path) = report {
        let mut s = format!("# detection report\n\n[config]\n{}\n[instances]\n", config.echo());
        for r in &reports {
            let _ = writeln!(
                s,
                "{} windows {} anomalous {} alarm {}",
                r.instance_id,
                r.verdicts.len(),
                r.anomalies(),
                r.alarm
            );
        }
        let _ = writeln!(s, "\nrevision_trigger = {trigger}");
        write_file(path, &s)?;
    }
    let anomalous = all.iter().any(|v| v.outcome.is_anomalous());
    Ok(if anomalous { EXIT_ANOMALY } else { 0 })
}

fn cmd_revise(
    config: &Config,
    model_path: &Path,
    out: &Path,
    confirm: bool,
    report: Option<&Path>,
    files: &[PathBuf],
) -> CliResult<u8> {
    if !confirm {
        return Err(CliError::Usage(
            "missing confirmation: revision changes the model; pass --confirm once the instances are verified legitimate"
                .into(),
        ));
    }
    let model = load_model(model_path)?;
    let confirmed = load_instances(files)?;
    let outcome = revise_with_instances(&model, &confirmed)?;
    save_model(&outcome.model, out)?;
    let extra = format!(
        "previous_clusters = {}\nconfirmed = {}\n",
        model.clusters.len(),
        confirmed.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(" ")
    );
    let text = build_report("revision report", config, &outcome, &extra);
    write_file(&report.map_or_else(|| sidecar(out), Path::to_path_buf), &text)?;
    println!(
        "clusters {} -> {} | retained {}",
        model.clusters.len(),
        outcome.model.clusters.len(),
        outcome.model.vectors.len()
    );
    Ok(0)
}

fn cmd_gen(overrides: &Overrides, name: &str, out_dir: &Path) -> CliResult<u8> {
    let mut scenario = match builtin(name) {
        Some(s) => s,
        None if Path::new(name).is_file() => Scenario::load(name)?,
        None => {
            let known: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
            return Err(CliError::Usage(format!(
                "unknown scenario `{name}`; built-in: {}",
                known.join(", ")
            )));
        }
    };
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    for path in write_scenario(&scenario, out_dir)? {
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_inspect(model_path: &Path) -> CliResult<u8> {
    let model = load_model(model_path)?;
    print!("{}", model_summary(&model));
    Ok(0)
}

fn run(cli: &Cli) -> CliResult<u8> {
    let config = effective_config(cli)?;
    log::debug!("effective config:\n{}", config.echo());
    match &cli.command {
        Command::Learn { out, report, files } => cmd_learn(&config, out, report.as_deref(), files),
        Command::Detect {
            model,
            out,
            report,
            files,
        } => cmd_detect(&config, &cli.overrides, model, out.as_deref(), report.as_deref(), files),
        Command::Revise {
            model,
            out,
            confirm,
            report,
            files,
        } => cmd_revise(&config, model, out, *confirm, report.as_deref(), files),
        Command::Gen { scenario, out_dir } => cmd_gen(&cli.overrides, scenario, out_dir),
        Command::Inspect { model } => cmd_inspect(model),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Core(err) => eprintln!("error: {err}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
