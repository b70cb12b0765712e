//! Monte Carlo driver: draw a scenario, fit the requested indexes, score both
//! samples and summarize the estimated ROC curves.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use funcroc_core::indexes::{
    fit_mean_difference, fit_optimal_linear, fit_quadratic, CovarianceMode, DiscriminantIndex, Penalty,
};
use funcroc_core::roc::{p_grid, score_sample, summarize, RocSummary};
use funcroc_core::simulation::{ScenarioSampler, ScenarioSpec};
use funcroc_core::FunctionalSample;

use crate::io::{ingest_curves, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Max,
    Min,
    Integral,
    Meandiff,
    Linear,
    Quad,
}

impl IndexKind {
    pub const ALL: [IndexKind; 6] = [
        IndexKind::Max,
        IndexKind::Min,
        IndexKind::Integral,
        IndexKind::Meandiff,
        IndexKind::Linear,
        IndexKind::Quad,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IndexKind::Max => "max",
            IndexKind::Min => "min",
            IndexKind::Integral => "integral",
            IndexKind::Meandiff => "meandiff",
            IndexKind::Linear => "linear",
            IndexKind::Quad => "quad",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        IndexKind::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| {
                format!("unknown index '{s}' (expected one of max, min, integral, meandiff, linear, quad)")
            })
    }
}

/// Parses a comma-separated index list; `all` selects every index.
pub fn parse_index_list(s: &str) -> Result<Vec<IndexKind>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(IndexKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let k: IndexKind = part.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Scenario(ScenarioSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub indexes: Vec<IndexKind>,
    pub reps: usize,
    pub var_fraction: f64,
    pub penalty_lambda: f64,
    pub ridge: f64,
    pub flip_orientation: bool,
    pub p_grid_size: usize,
    /// Keep every estimated ROC curve in the replication results.
    pub keep_roc: bool,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(source: DataSource) -> Self {
        RunConfig {
            source,
            indexes: IndexKind::ALL.to_vec(),
            reps: 1,
            var_fraction: 0.95,
            penalty_lambda: 0.0,
            ridge: 0.0,
            flip_orientation: false,
            p_grid_size: 101,
            keep_roc: false,
            output_path: None,
        }
    }

    pub fn scenario(spec: ScenarioSpec) -> Self {
        RunConfig::new(DataSource::Scenario(spec))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if !(self.var_fraction > 0.0 && self.var_fraction <= 1.0) {
            return bad("var-fraction must lie in (0, 1]");
        }
        if !(self.penalty_lambda >= 0.0) || !self.penalty_lambda.is_finite() {
            return bad("lambda must be nonnegative");
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return bad("ridge must be nonnegative");
        }
        if self.p_grid_size < 2 {
            return bad("the ROC grid needs at least two points");
        }
        if let DataSource::Scenario(spec) = &self.source {
            spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    fn echo(&self) -> ConfigEcho {
        let (scenario, rho, process, n_d, n_h, grid_size, input) = match &self.source {
            DataSource::Scenario(s) => (
                Some(s.name.to_string()),
                s.rho,
                s.name
                    .is_proportional()
                    .then(|| s.process.unwrap_or_default().to_string()),
                Some(s.n_d),
                Some(s.n_h),
                Some(s.grid_size),
                None,
            ),
            DataSource::File(p) => (None, None, None, None, None, None, Some(p.display().to_string())),
        };
        ConfigEcho {
            scenario,
            input,
            rho,
            process,
            n_d,
            n_h,
            grid_size,
            indexes: self.indexes.clone(),
            reps: self.reps,
            var_fraction: self.var_fraction,
            penalty_lambda: self.penalty_lambda,
            ridge: self.ridge,
            flip_orientation: self.flip_orientation,
            p_grid_size: self.p_grid_size,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] funcroc_core::Error),
}

/// Metrics of one index on one draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMetrics {
    pub auc: f64,
    pub youden: f64,
    pub youden_threshold: f64,
    /// True when the scores were negated to bring the AUC above 1/2.
    pub flipped: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub roc_values: Option<Vec<f64>>,
}

pub type IndexOutcome = Result<IndexMetrics, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub replication_id: u64,
    pub per_index: IndexMap<IndexKind, IndexOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub scenario: Option<String>,
    pub input: Option<String>,
    pub rho: Option<f64>,
    pub process: Option<String>,
    pub n_d: Option<usize>,
    pub n_h: Option<usize>,
    pub grid_size: Option<usize>,
    pub indexes: Vec<IndexKind>,
    pub reps: usize,
    pub var_fraction: f64,
    pub penalty_lambda: f64,
    pub ridge: f64,
    pub flip_orientation: bool,
    pub p_grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    /// `None` when every replication failed for this index.
    pub mean_auc: Option<f64>,
    /// Standard deviation with divisor `reps - 1`; `None` below two successes.
    pub sd_auc: Option<f64>,
    pub mean_youden: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: ConfigEcho,
    pub per_index: IndexMap<IndexKind, IndexSummary>,
    pub seed: Option<u64>,
    pub elapsed_seconds: f64,
}

impl StudyReport {
    /// True when at least one index was requested and every one of them
    /// failed in every replication.
    pub fn all_failed(&self) -> bool {
        !self.per_index.is_empty() && self.per_index.values().all(|s| s.successes == 0)
    }
}

/// Fits one index on a draw.
pub fn fit_index(
    kind: IndexKind,
    d: &FunctionalSample,
    h: &FunctionalSample,
    config: &RunConfig,
) -> funcroc_core::Result<DiscriminantIndex> {
    match kind {
        IndexKind::Max => Ok(DiscriminantIndex::Max),
        IndexKind::Min => Ok(DiscriminantIndex::Min),
        IndexKind::Integral => Ok(DiscriminantIndex::Integral),
        IndexKind::Meandiff => fit_mean_difference(d, h),
        IndexKind::Linear => {
            let penalty = if config.penalty_lambda > 0.0 {
                Penalty::SecondDifference {
                    lambda: config.penalty_lambda,
                }
            } else {
                Penalty::None
            };
            fit_optimal_linear(d, h, CovarianceMode::Average, config.var_fraction, &penalty)
        }
        IndexKind::Quad => fit_quadratic(d, h, config.var_fraction, config.ridge),
    }
}

fn evaluate(
    kind: IndexKind,
    d: &FunctionalSample,
    h: &FunctionalSample,
    config: &RunConfig,
    grid: &[f64],
) -> funcroc_core::Result<(IndexMetrics, RocSummary)> {
    let idx = fit_index(kind, d, h, config)?;
    let mut scores = score_sample(&idx, d, h)?;
    let mut flipped = false;
    if config.flip_orientation && funcroc_core::roc::auc(&scores) < 0.5 {
        scores = scores.map(|v| -v)?;
        flipped = true;
    }
    let summary = summarize(&scores, grid)?;
    let metrics = IndexMetrics {
        auc: summary.auc,
        youden: summary.youden,
        youden_threshold: summary.youden_threshold,
        flipped,
        roc_values: config.keep_roc.then(|| summary.roc_values.clone()),
    };
    Ok((metrics, summary))
}

fn evaluate_all(
    d: &FunctionalSample,
    h: &FunctionalSample,
    config: &RunConfig,
    grid: &[f64],
) -> IndexMap<IndexKind, IndexOutcome> {
    config
        .indexes
        .iter()
        .map(|&k| (k, evaluate(k, d, h, config, grid).map(|(m, _)| m).map_err(|e| e.to_string())))
        .collect()
}

fn scenario_of(config: &RunConfig) -> Result<&ScenarioSpec, HarnessError> {
    match &config.source {
        DataSource::Scenario(s) => Ok(s),
        DataSource::File(_) => Err(HarnessError::Config(
            "replications need a simulated scenario; use analyze for files".into(),
        )),
    }
}

/// Runs one replication; index failures are recorded, not propagated.
pub fn run_replication(config: &RunConfig, replication_id: u64) -> Result<ReplicationResult, HarnessError> {
    config.validate()?;
    let sampler = ScenarioSampler::new(scenario_of(config)?)?;
    replicate(&sampler, config, &p_grid(config.p_grid_size)?, replication_id)
}

fn replicate(
    sampler: &ScenarioSampler,
    config: &RunConfig,
    grid: &[f64],
    replication_id: u64,
) -> Result<ReplicationResult, HarnessError> {
    let (d, h) = sampler.draw(replication_id)?;
    Ok(ReplicationResult {
        replication_id,
        per_index: evaluate_all(&d, &h, config, grid),
    })
}

/// Runs every replication (concurrently) and returns the results in
/// replication order.
pub fn run_replications(config: &RunConfig) -> Result<Vec<ReplicationResult>, HarnessError> {
    config.validate()?;
    let sampler = ScenarioSampler::new(scenario_of(config)?)?;
    let grid = p_grid(config.p_grid_size)?;
    (0..config.reps as u64)
        .into_par_iter()
        .map(|r| replicate(&sampler, config, &grid, r))
        .collect()
}

/// Monte Carlo study: mean and standard deviation of the AUC per index.
pub fn run_study(config: &RunConfig) -> Result<StudyReport, HarnessError> {
    let start = Instant::now();
    let results = run_replications(config)?;
    Ok(aggregate(config, &results, start.elapsed().as_secs_f64()))
}

/// Summary statistics per index over replication results, in the order of
/// `config.indexes`.
pub fn aggregate(config: &RunConfig, results: &[ReplicationResult], elapsed_seconds: f64) -> StudyReport {
    let per_index = config
        .indexes
        .iter()
        .map(|&k| {
            let mut aucs = Vec::new();
            let mut youdens = Vec::new();
            let mut failures = 0;
            let mut first_error = None;
            for r in results {
                match r.per_index.get(&k) {
                    Some(Ok(m)) => {
                        aucs.push(m.auc);
                        youdens.push(m.youden);
                    }
                    Some(Err(e)) => {
                        failures += 1;
                        first_error.get_or_insert_with(|| e.clone());
                    }
                    None => {}
                }
            }
            let summary = IndexSummary {
                mean_auc: mean(&aucs),
                sd_auc: sd(&aucs),
                mean_youden: mean(&youdens),
                successes: aucs.len(),
                failures,
                first_error,
            };
            (k, summary)
        })
        .collect();
    StudyReport {
        config: config.echo(),
        per_index,
        seed: match &config.source {
            DataSource::Scenario(s) => Some(s.seed),
            DataSource::File(_) => None,
        },
        elapsed_seconds,
    }
}

fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

fn sd(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x)?;
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (x.len() - 1) as f64).sqrt())
}

/// Single-dataset analysis: report plus the estimated ROC curve per index.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub report: StudyReport,
    pub curves: IndexMap<IndexKind, Result<RocSummary, String>>,
}

/// Fits and evaluates every requested index once on the full data.
pub fn analyze(d: &FunctionalSample, h: &FunctionalSample, config: &RunConfig) -> Result<Analysis, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let grid = p_grid(config.p_grid_size)?;
    let mut per_index = IndexMap::new();
    let mut curves = IndexMap::new();
    for &k in &config.indexes {
        match evaluate(k, d, h, config, &grid) {
            Ok((m, s)) => {
                per_index.insert(k, Ok(m));
                curves.insert(k, Ok(s));
            }
            Err(e) => {
                per_index.insert(k, Err(e.to_string()));
                curves.insert(k, Err(e.to_string()));
            }
        }
    }
    let result = ReplicationResult {
        replication_id: 0,
        per_index,
    };
    let mut cfg = config.clone();
    cfg.reps = 1;
    let report = aggregate(&cfg, std::slice::from_ref(&result), start.elapsed().as_secs_f64());
    Ok(Analysis { report, curves })
}

/// Reads a curve file and analyzes it.
pub fn analyze_file(config: &RunConfig) -> Result<Analysis, HarnessError> {
    let DataSource::File(path) = &config.source else {
        return Err(HarnessError::Config("analyze_file needs an input file".into()));
    };
    let (d, h) = ingest_curves(path)?;
    analyze(&d, &h, config)
}
