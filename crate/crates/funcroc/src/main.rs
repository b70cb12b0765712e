use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use funcroc::core::indexes::DiscriminantIndex;
use funcroc::core::roc::{p_grid, roc_curve, score_sample};
use funcroc::core::simulation::{BaseProcess, ScenarioName, ScenarioSpec};
use funcroc::harness::{
    aggregate, analyze, fit_index, parse_index_list, run_replications, DataSource, HarnessError, IndexKind,
    RunConfig,
};
use funcroc::io::ingest_curves;
use funcroc::report::{render_text, to_json, write_replication_roc_csv, write_roc_csv};

#[derive(Parser)]
#[command(name = "funcroc", version, about = "ROC analysis of functional discriminant indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo study on a simulated scenario.
    Simulate(SimulateArgs),
    /// Fit and evaluate indexes on a curve file.
    Analyze(AnalyzeArgs),
    /// Print the estimated ROC curve of one index as `p,roc` pairs.
    Roc(RocArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct FitArgs {
    /// Comma-separated list of max, min, integral, meandiff, linear, quad (or `all`).
    #[arg(long, default_value = "all")]
    indexes: String,
    #[arg(long, default_value_t = 0.95)]
    var_fraction: f64,
    /// Roughness penalty weight for the linear index.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Ridge added to the score covariances of the quadratic index.
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Negate an index whose AUC falls below 1/2.
    #[arg(long)]
    flip: bool,
    #[arg(long, default_value_t = 101)]
    p_grid_size: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the estimated ROC curves to this CSV file.
    #[arg(long)]
    export_roc: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: ScenarioName,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    process: Option<BaseProcess>,
    #[arg(long, default_value_t = 300)]
    nd: usize,
    #[arg(long, default_value_t = 300)]
    nh: usize,
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct RocArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    index: IndexKind,
    #[arg(long, default_value_t = 0.95)]
    var_fraction: f64,
    #[arg(long, default_value_t = 101)]
    p_grid_size: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match &e {
            HarnessError::Core(c) if c.is_numerical() => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn config_from(fit: &FitArgs, source: DataSource) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::new(source);
    cfg.indexes = parse_index_list(&fit.indexes).map_err(Failure::Config)?;
    cfg.var_fraction = fit.var_fraction;
    cfg.penalty_lambda = fit.lambda;
    cfg.ridge = fit.ridge;
    cfg.flip_orientation = fit.flip;
    cfg.p_grid_size = fit.p_grid_size;
    cfg.keep_roc = fit.export_roc.is_some();
    cfg.output_path = fit.out.clone();
    Ok(cfg)
}

fn emit(fit: &FitArgs, report: &funcroc::harness::StudyReport) -> Result<(), Failure> {
    let mut out = open_out(&fit.out)?;
    match fit.format {
        Format::Text => out.write_all(render_text(report).as_bytes())?,
        Format::Json => writeln!(out, "{}", to_json(report).map_err(|e| Failure::Config(e.to_string()))?)?,
    }
    out.flush()?;
    if report.all_failed() {
        return Err(Failure::Numerical("every requested index failed".into()));
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut spec = ScenarioSpec::new(a.scenario, a.seed)
        .with_sizes(a.nd, a.nh)
        .with_grid_size(a.grid_size);
    spec.rho = a.rho;
    spec.process = a.process;
    let mut cfg = config_from(&a.fit, DataSource::Scenario(spec))?;
    cfg.reps = a.reps;
    let start = std::time::Instant::now();
    let results = run_replications(&cfg)?;
    let report = aggregate(&cfg, &results, start.elapsed().as_secs_f64());
    if let Some(path) = &a.fit.export_roc {
        let grid = p_grid(cfg.p_grid_size).map_err(|e| Failure::Config(e.to_string()))?;
        write_replication_roc_csv(open_out(&Some(path.clone()))?, &grid, &results)?;
    }
    emit(&a.fit, &report)
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<(), Failure> {
    let cfg = config_from(&a.fit, DataSource::File(a.input.clone()))?;
    let (d, h) = ingest_curves(&a.input).map_err(HarnessError::from)?;
    let analysis = analyze(&d, &h, &cfg)?;
    if let Some(path) = &a.fit.export_roc {
        write_roc_csv(open_out(&Some(path.clone()))?, &analysis.curves)?;
    }
    emit(&a.fit, &analysis.report)
}

fn roc_cmd(a: RocArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::new(DataSource::File(a.input.clone()));
    cfg.var_fraction = a.var_fraction;
    cfg.p_grid_size = a.p_grid_size;
    cfg.validate()?;
    let (d, h) = ingest_curves(&a.input).map_err(HarnessError::from)?;
    let idx: DiscriminantIndex = fit_index(a.index, &d, &h, &cfg).map_err(HarnessError::from)?;
    let scores = score_sample(&idx, &d, &h).map_err(HarnessError::from)?;
    let grid = p_grid(cfg.p_grid_size).map_err(HarnessError::from)?;
    let curve = roc_curve(&scores, &grid).map_err(HarnessError::from)?;
    let mut out = open_out(&a.out)?;
    for (p, r) in curve.p_grid.iter().zip(&curve.roc_values) {
        writeln!(out, "{p},{r}")?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Roc(a) => roc_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
