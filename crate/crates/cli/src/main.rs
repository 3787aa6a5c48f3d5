mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use probclust_core::data::{ComponentList, CsvOptions, LabelColumn};
use probclust_core::{EngineConfig, SdlConfig};

/// Probability-space clustering of numeric CSV data.
#[derive(Parser, Debug)]
#[command(name = "probclust", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster a CSV dataset and write a JSON model.
    Cluster(ClusterArgs),
    /// Assign every row of a CSV to the nearest region of a model.
    Assign(AssignArgs),
    /// Check the metric axioms on model or random spaces.
    CheckMetric(CheckMetricArgs),
    /// Generate a labelled Gaussian mixture as CSV.
    Gen(GenArgs),
    /// Draw a 2-D projection of a model and its data as SVG.
    Report(ReportArgs),
    /// Cluster two-component mixtures at several dimensions.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct LabelArgs {
    /// Treat the last column as labels.
    #[arg(long, conflicts_with = "no_labels")]
    labels: bool,
    /// Treat every column as a feature.
    #[arg(long)]
    no_labels: bool,
}

impl LabelArgs {
    fn csv_options(self) -> CsvOptions {
        let labels = match (self.labels, self.no_labels) {
            (true, _) => LabelColumn::Present,
            (_, true) => LabelColumn::Absent,
            _ => LabelColumn::Auto,
        };
        CsvOptions {
            labels,
            ..CsvOptions::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
struct EngineArgs {
    /// Stop once at most this many clusters remain.
    #[arg(long, value_parser = positive)]
    target_k: Option<u64>,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    max_levels: u32,
    /// Convergence threshold on the squared center shift.
    #[arg(long, default_value_t = 1e-8)]
    delta: f64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    max_migrations: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    max_convergences: u32,
    /// Cap on fit iterations per round.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    mu: u32,
    /// Skip merging overlapping regions.
    #[arg(long)]
    no_merge: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig, Failure> {
        let cfg = EngineConfig {
            target_k: self.target_k.map(|k| k as usize),
            max_levels: self.max_levels,
            merge_enabled: !self.no_merge,
            sdl: SdlConfig {
                delta: self.delta,
                max_migrations: self.max_migrations,
                max_convergences: self.max_convergences,
                mu: self.mu,
                seed: self.seed,
            },
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Also write a JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    labels: LabelArgs,
}

#[derive(Args, Debug)]
struct AssignArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    labels: LabelArgs,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "random"])))]
struct CheckMetricArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of random spaces to draw instead of reading a model.
    #[arg(long, requires = "dim", value_parser = positive)]
    random: Option<u64>,
    #[arg(long, requires = "random", value_parser = positive)]
    dim: Option<u64>,
    #[arg(long, default_value_t = 1000, value_parser = positive)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mixture").required(true).args(["components", "spec"])))]
struct GenArgs {
    /// Components as `weight:c0,c1,..:sigma[,..]` separated by `;`.
    #[arg(long, value_parser = parse_components)]
    components: Option<ComponentList>,
    /// JSON file with a `components` list.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_parser = positive)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Two dimension indices to project onto.
    #[arg(long, default_value = "0,1", value_parser = parse_projection)]
    proj: (usize, usize),
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    labels: LabelArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,10,50")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(2..))]
    points_per_component: u64,
    /// Per-dimension center separation in units of sigma.
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

fn positive(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_components(s: &str) -> Result<ComponentList, String> {
    s.parse::<ComponentList>().map_err(|e| e.to_string())
}

fn parse_projection(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let idx = |x: &str| {
                x.parse::<usize>()
                    .map_err(|_| format!("`{x}` is not a dimension index"))
            };
            Ok((idx(a)?, idx(b)?))
        }
        _ => Err("expected two comma-separated indices, e.g. 0,1".into()),
    }
}

/// Exit 2 for usage problems, 1 for everything else.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.into())
    }
}

/// A closed stdout (e.g. piping into `head`) is not an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match cli.command {
        Command::Cluster(a) => commands::cluster(a),
        Command::Assign(a) => commands::assign(a),
        Command::CheckMetric(a) => commands::check_metric(a),
        Command::Gen(a) => commands::gen(a),
        Command::Report(a) => commands::report(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
