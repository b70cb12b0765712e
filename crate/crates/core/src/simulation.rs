//! Gaussian-process generators and the catalog of simulation scenarios.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimation::CovarianceKernel;
use crate::grid::{make_uniform_grid, FunctionalSample, Grid, Group};
use crate::linalg;

/// Multipliers of the mean diagonal tried, in order, before giving up on a
/// Cholesky factor.
const JITTER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    /// `min(s, t)`.
    BrownianMotion,
    /// `exp(-|s - t| / theta)`.
    ExponentialVariogram { theta: f64 },
    /// Ornstein-Uhlenbeck started at zero:
    /// `(1 / 2 theta) exp(-theta (s + t)) (exp(2 theta min(s, t)) - 1)`.
    OrnsteinUhlenbeck { theta: f64 },
    /// `sum_l lambda_l phi_l(s) phi_l(t)` with the Brownian eigenfunctions
    /// `phi_l(t) = sqrt(2) sin((2l - 1) pi t / 2)`.
    FiniteRankFcpc { lambdas: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanFunction {
    Zero,
    /// `a sin(pi t)`.
    SineAmplitude(f64),
}

impl MeanFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            MeanFunction::Zero => 0.0,
            MeanFunction::SineAmplitude(a) => a * libm::sin(PI * t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub mean: MeanFunction,
    /// Multiplier of the covariance.
    pub scale: f64,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, mean: MeanFunction, scale: f64) -> Result<Self> {
        let spec = ProcessSpec { kind, mean, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn centered(kind: ProcessKind) -> Self {
        ProcessSpec {
            kind,
            mean: MeanFunction::Zero,
            scale: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid("covariance scale must be positive"));
        }
        match self.kind {
            ProcessKind::ExponentialVariogram { theta } | ProcessKind::OrnsteinUhlenbeck { theta } => {
                if !(theta > 0.0) || !theta.is_finite() {
                    return Err(Error::invalid("theta must be positive"));
                }
            }
            ProcessKind::FiniteRankFcpc { lambdas } => {
                if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                    return Err(Error::invalid("FCPC eigenvalues must be positive"));
                }
            }
            ProcessKind::BrownianMotion => {}
        }
        if let MeanFunction::SineAmplitude(a) = self.mean {
            if !a.is_finite() {
                return Err(Error::invalid("mean amplitude must be finite"));
            }
        }
        Ok(())
    }
}

/// `sqrt(2) sin((2l - 1) pi t / 2)` for `l >= 1`.
pub fn brownian_eigenfunction(l: usize, t: f64) -> f64 {
    SQRT_2 * libm::sin((2 * l - 1) as f64 * PI * t / 2.0)
}

/// `4 / ((2l - 1)^2 pi^2)` for `l >= 1`.
pub fn brownian_eigenvalue(l: usize) -> f64 {
    let c = (2 * l - 1) as f64 * PI;
    4.0 / (c * c)
}

fn kernel_value(kind: &ProcessKind, s: f64, t: f64) -> f64 {
    match *kind {
        ProcessKind::BrownianMotion => s.min(t),
        ProcessKind::ExponentialVariogram { theta } => libm::exp(-(s - t).abs() / theta),
        ProcessKind::OrnsteinUhlenbeck { theta } => {
            libm::exp(-theta * (s + t)) * libm::expm1(2.0 * theta * s.min(t)) / (2.0 * theta)
        }
        ProcessKind::FiniteRankFcpc { lambdas } => lambdas
            .iter()
            .enumerate()
            .map(|(i, l)| l * brownian_eigenfunction(i + 1, s) * brownian_eigenfunction(i + 1, t))
            .sum(),
    }
}

/// Covariance kernel of the process on `grid`, times its scale.
pub fn kernel_matrix(spec: &ProcessSpec, grid: &Arc<Grid>) -> Result<CovarianceKernel> {
    spec.validate()?;
    let t = grid.points();
    let m = t.len();
    let mut k = DMatrix::from_fn(m, m, |i, j| spec.scale * kernel_value(&spec.kind, t[i], t[j]));
    linalg::symmetrize(&mut k);
    CovarianceKernel::new(grid.clone(), k)
}

#[derive(Debug, Clone)]
enum Factor {
    /// Lower Cholesky factor of the kernel.
    Dense(DMatrix<f64>),
    /// `m x 3` matrix with columns `sqrt(scale lambda_l) phi_l`.
    KarhunenLoeve(DMatrix<f64>),
}

/// Draws paths of one process on a fixed grid.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    grid: Arc<Grid>,
    mean: Vec<f64>,
    factor: Factor,
    jitter: f64,
}

impl GaussianSampler {
    pub fn new(spec: &ProcessSpec, grid: &Arc<Grid>) -> Result<Self> {
        spec.validate()?;
        let t = grid.points();
        let mean: Vec<f64> = t.iter().map(|t| spec.mean.eval(*t)).collect();
        let (factor, jitter) = match spec.kind {
            ProcessKind::FiniteRankFcpc { lambdas } => {
                let f = DMatrix::from_fn(t.len(), 3, |i, l| {
                    libm::sqrt(spec.scale * lambdas[l]) * brownian_eigenfunction(l + 1, t[i])
                });
                (Factor::KarhunenLoeve(f), 0.0)
            }
            _ => {
                let k = kernel_matrix(spec, grid)?;
                let (l, eps) = jittered_cholesky(k.matrix())?;
                (Factor::Dense(l), eps)
            }
        };
        Ok(GaussianSampler {
            grid: grid.clone(),
            mean,
            factor,
            jitter,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Jitter multiplier that made the kernel factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `n` independent paths `mean + L z`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, group: Group, rng: &mut R) -> Result<FunctionalSample> {
        if n == 0 {
            return Err(Error::invalid("cannot draw an empty sample"));
        }
        let m = self.grid.len();
        let factor = match &self.factor {
            Factor::Dense(l) | Factor::KarhunenLoeve(l) => l,
        };
        let r = factor.ncols();
        let mut z = Vec::with_capacity(n * r);
        for _ in 0..n * r {
            z.push(rng.sample::<f64, _>(StandardNormal));
        }
        let z = DMatrix::from_row_slice(n, r, &z);
        let mut x = z * factor.transpose();
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] += self.mean[j];
            }
        }
        FunctionalSample::new(self.grid.clone(), x, group)
    }
}

fn jittered_cholesky(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let m = k.nrows();
    let mean_diag = k.diagonal().sum() / m as f64;
    for eps in JITTER {
        let mut a = k.clone();
        for i in 0..m {
            a[(i, i)] += eps * mean_diag;
        }
        if let Some(c) = linalg::cholesky(a) {
            return Ok((c.l(), eps));
        }
    }
    Err(Error::SimulationDegeneracy(alloc::format!(
        "kernel is not positive definite even with jitter {:e}",
        JITTER[JITTER.len() - 1]
    )))
}

/// `n` paths of the process described by `spec`.
pub fn sample_gaussian<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    grid: &Arc<Grid>,
    n: usize,
    group: Group,
    rng: &mut R,
) -> Result<FunctionalSample> {
    GaussianSampler::new(spec, grid)?.sample(n, group, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    P0,
    P1,
    C10,
    C11,
    C20,
    C21,
    D10,
    D11,
    D20,
    D21,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::P0,
        ScenarioName::P1,
        ScenarioName::C10,
        ScenarioName::C11,
        ScenarioName::C20,
        ScenarioName::C21,
        ScenarioName::D10,
        ScenarioName::D11,
        ScenarioName::D20,
        ScenarioName::D21,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::P0 => "P0",
            ScenarioName::P1 => "P1",
            ScenarioName::C10 => "C10",
            ScenarioName::C11 => "C11",
            ScenarioName::C20 => "C20",
            ScenarioName::C21 => "C21",
            ScenarioName::D10 => "D10",
            ScenarioName::D11 => "D11",
            ScenarioName::D20 => "D20",
            ScenarioName::D21 => "D21",
        }
    }

    /// True for the proportional-covariance scenarios.
    pub fn is_proportional(&self) -> bool {
        matches!(self, ScenarioName::P0 | ScenarioName::P1)
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| Error::InvalidScenario(alloc::format!("unknown scenario '{s}'")))
    }
}

/// Base process of the proportional scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BaseProcess {
    #[default]
    Brownian,
    ExpVar,
}

impl BaseProcess {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaseProcess::Brownian => "brownian",
            BaseProcess::ExpVar => "expvar",
        }
    }

    fn kind(&self) -> ProcessKind {
        match self {
            BaseProcess::Brownian => ProcessKind::BrownianMotion,
            BaseProcess::ExpVar => ProcessKind::ExponentialVariogram { theta: EXPVAR_THETA },
        }
    }
}

impl fmt::Display for BaseProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "brownian" | "bm" => Ok(BaseProcess::Brownian),
            "expvar" | "exponential" => Ok(BaseProcess::ExpVar),
            other => Err(Error::InvalidScenario(alloc::format!("unknown process '{other}'"))),
        }
    }
}

const EXPVAR_THETA: f64 = 0.2;
const OU_THETA: f64 = 1.0 / 3.0;

/// A scenario of the catalog with its sample sizes and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    /// Covariance ratio of the proportional scenarios.
    pub rho: Option<f64>,
    /// Base process of the proportional scenarios; Brownian when unset.
    pub process: Option<BaseProcess>,
    pub n_d: usize,
    pub n_h: usize,
    pub grid_size: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Scenario with 300 curves per group on a 100-point grid.
    pub fn new(name: ScenarioName, seed: u64) -> Self {
        ScenarioSpec {
            name,
            rho: None,
            process: None,
            n_d: 300,
            n_h: 300,
            grid_size: 100,
            seed,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn with_process(mut self, process: BaseProcess) -> Self {
        self.process = Some(process);
        self
    }

    pub fn with_sizes(mut self, n_d: usize, n_h: usize) -> Self {
        self.n_d = n_d;
        self.n_h = n_h;
        self
    }

    pub fn with_grid_size(mut self, m: usize) -> Self {
        self.grid_size = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.n_d == 0 || self.n_h == 0 {
            return bad("sample sizes must be positive".into());
        }
        if self.grid_size < 2 {
            return bad("the grid needs at least two points".into());
        }
        if self.name.is_proportional() {
            let Some(rho) = self.rho else {
                return bad(alloc::format!("{} needs a covariance ratio rho", self.name));
            };
            if !(rho > 0.0) || !rho.is_finite() {
                return bad("rho must be positive".into());
            }
            if self.name == ScenarioName::P0 && rho == 1.0 {
                return bad("P0 with rho = 1 gives two identical populations".into());
            }
        } else {
            if self.rho.is_some() {
                return bad(alloc::format!("{} takes no rho", self.name));
            }
            if self.process.is_some() {
                return bad(alloc::format!("{} has a fixed process", self.name));
            }
        }
        Ok(())
    }

    /// Diseased and healthy processes of the scenario.
    pub fn processes(&self) -> Result<(ProcessSpec, ProcessSpec)> {
        self.validate()?;
        use MeanFunction::{SineAmplitude, Zero};
        use ScenarioName::*;
        let bm = ProcessKind::BrownianMotion;
        let fcpc1 = ProcessKind::FiniteRankFcpc { lambdas: [2.0, 0.3, 0.05] };
        let fcpc2 = ProcessKind::FiniteRankFcpc { lambdas: [0.3, 2.0, 0.05] };
        let ou = ProcessKind::OrnsteinUhlenbeck { theta: OU_THETA };
        let ev = ProcessKind::ExponentialVariogram { theta: EXPVAR_THETA };
        let cpc_h = ProcessSpec::centered(bm);
        let pair = match self.name {
            P0 | P1 => {
                let base = self.process.unwrap_or_default().kind();
                let rho = self.rho.unwrap_or(1.0);
                let mean = if self.name == P0 { Zero } else { SineAmplitude(2.0) };
                (ProcessSpec::new(base, mean, rho)?, ProcessSpec::centered(base))
            }
            C10 => (ProcessSpec::centered(fcpc1), cpc_h),
            C11 => (ProcessSpec::new(fcpc1, SineAmplitude(3.0), 1.0)?, cpc_h),
            C20 => (ProcessSpec::centered(fcpc2), cpc_h),
            C21 => (ProcessSpec::new(fcpc2, SineAmplitude(3.0), 1.0)?, cpc_h),
            D10 => (ProcessSpec::centered(bm), ProcessSpec::centered(ou)),
            D11 => (ProcessSpec::new(bm, SineAmplitude(2.0), 1.0)?, ProcessSpec::centered(ou)),
            D20 => (ProcessSpec::centered(bm), ProcessSpec::centered(ev)),
            D21 => (ProcessSpec::new(bm, SineAmplitude(2.0), 1.0)?, ProcessSpec::centered(ev)),
        };
        Ok(pair)
    }
}

/// Generator of replication `r` seeded with `seed ^ r`.
pub fn substream(seed: u64, replication: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed ^ replication)
}

/// Samplers of a scenario, reusable across replications.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    spec: ScenarioSpec,
    diseased: GaussianSampler,
    healthy: GaussianSampler,
}

impl ScenarioSampler {
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        let (pd, ph) = spec.processes()?;
        let grid = Arc::new(make_uniform_grid(spec.grid_size)?);
        Ok(ScenarioSampler {
            spec: spec.clone(),
            diseased: GaussianSampler::new(&pd, &grid)?,
            healthy: GaussianSampler::new(&ph, &grid)?,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.diseased.grid()
    }

    /// Draw of replication `r`; the diseased sample is drawn first.
    pub fn draw(&self, replication: u64) -> Result<(FunctionalSample, FunctionalSample)> {
        let mut rng = substream(self.spec.seed, replication);
        let d = self.diseased.sample(self.spec.n_d, Group::Diseased, &mut rng)?;
        let h = self.healthy.sample(self.spec.n_h, Group::Healthy, &mut rng)?;
        Ok((d, h))
    }
}

/// Replication 0 of the scenario.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(FunctionalSample, FunctionalSample)> {
    generate_replication(spec, 0)
}

pub fn generate_replication(
    spec: &ScenarioSpec,
    replication: u64,
) -> Result<(FunctionalSample, FunctionalSample)> {
    ScenarioSampler::new(spec)?.draw(replication)
}
