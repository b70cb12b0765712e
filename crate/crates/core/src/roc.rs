//! Empirical distributions and the plug-in ROC, AUC and Youden estimators.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::FunctionalSample;
use crate::indexes::DiscriminantIndex;

/// Scores of the two groups under one index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSample {
    diseased: Vec<f64>,
    healthy: Vec<f64>,
}

impl ScoreSample {
    pub fn new(diseased: Vec<f64>, healthy: Vec<f64>) -> Result<Self> {
        if diseased.is_empty() || healthy.is_empty() {
            return Err(Error::invalid("both score groups must be nonempty"));
        }
        if diseased.iter().chain(&healthy).any(|v| !v.is_finite()) {
            return Err(Error::invalid("scores must be finite"));
        }
        Ok(ScoreSample { diseased, healthy })
    }

    pub fn diseased(&self) -> &[f64] {
        &self.diseased
    }

    pub fn healthy(&self) -> &[f64] {
        &self.healthy
    }

    /// Exchanges the roles of the two groups.
    pub fn swapped(&self) -> ScoreSample {
        ScoreSample {
            diseased: self.healthy.clone(),
            healthy: self.diseased.clone(),
        }
    }

    /// Applies `f` to every score.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScoreSample> {
        ScoreSample::new(
            self.diseased.iter().map(|v| f(*v)).collect(),
            self.healthy.iter().map(|v| f(*v)).collect(),
        )
    }
}

/// A sorted sample supporting repeated distribution and quantile queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::invalid("empirical distribution of an empty sample"));
        }
        if sample.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("sample contains NaN"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{y_i <= t}`.
    pub fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|y| *y <= t)
    }

    /// `#{y_i < t}`.
    pub fn count_lt(&self, t: f64) -> usize {
        self.sorted.partition_point(|y| *y < t)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.len() as f64
    }

    /// Generalized inverse `inf{t : F(t) >= p}`, the order statistic
    /// `y_(ceil(n p))`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("quantile level must lie in (0, 1]"));
        }
        Ok(self.sorted[order_index(self.len(), p) - 1])
    }
}

/// One-based rank `ceil(n p)`, tolerant of `n p` landing a hair above an
/// integer through roundoff in `p`.
fn order_index(n: usize, p: f64) -> usize {
    let j = libm::ceil(n as f64 * p - 1e-9);
    (j.max(1.0) as usize).min(n)
}

/// `(1/n) #{y_i <= t}`.
pub fn ecdf(sample: &[f64], t: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("ecdf of an empty sample"));
    }
    Ok(sample.iter().filter(|y| **y <= t).count() as f64 / sample.len() as f64)
}

pub fn equantile(sample: &[f64], p: f64) -> Result<f64> {
    EmpiricalDistribution::new(sample)?.quantile(p)
}

/// Estimated ROC curve on an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub p_grid: Vec<f64>,
    pub roc_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocSummary {
    pub p_grid: Vec<f64>,
    pub roc_values: Vec<f64>,
    pub auc: f64,
    pub youden: f64,
    pub youden_threshold: f64,
}

/// `size` equally spaced points on `[0, 1]`.
pub fn p_grid(size: usize) -> Result<Vec<f64>> {
    if size < 2 {
        return Err(Error::invalid("an evaluation grid needs at least two points"));
    }
    let last = (size - 1) as f64;
    Ok((0..size).map(|i| i as f64 / last).collect())
}

/// The 101-point grid `0, 0.01, ..., 1`.
pub fn default_p_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// `1 - F_D(F_H^{-1}(1 - p))` at each grid value, with the values 0 and 1
/// at the endpoints `p = 0` and `p = 1`.
pub fn roc_curve(s: &ScoreSample, p_grid: &[f64]) -> Result<RocCurve> {
    if p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("ROC evaluation points must lie in [0, 1]"));
    }
    if p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("ROC evaluation points must be increasing"));
    }
    let fd = EmpiricalDistribution::new(&s.diseased)?;
    let fh = EmpiricalDistribution::new(&s.healthy)?;
    let roc_values = p_grid
        .iter()
        .map(|&p| {
            if p == 0.0 {
                0.0
            } else if p == 1.0 {
                1.0
            } else {
                let c = fh.sorted[order_index(fh.len(), 1.0 - p) - 1];
                1.0 - fd.cdf(c)
            }
        })
        .collect();
    Ok(RocCurve {
        p_grid: p_grid.to_vec(),
        roc_values,
    })
}

/// Number of pairs with a diseased score strictly above a healthy one.
pub fn concordant_pairs(s: &ScoreSample) -> u64 {
    let mut healthy = s.healthy.clone();
    healthy.sort_by(f64::total_cmp);
    s.diseased
        .iter()
        .map(|d| healthy.partition_point(|h| h < d) as u64)
        .sum()
}

/// `(1 / n_D n_H) sum_i sum_l 1{Y_D,i > Y_H,l}`.
pub fn auc(s: &ScoreSample) -> f64 {
    let pairs = s.diseased.len() as u64 * s.healthy.len() as u64;
    concordant_pairs(s) as f64 / pairs as f64
}

/// `max_c {F_H(c) - F_D(c)}` over the pooled score values, with the smallest
/// maximizing threshold.
pub fn youden(s: &ScoreSample) -> (f64, f64) {
    let nd = s.diseased.len() as i64;
    let nh = s.healthy.len() as i64;
    let mut d = s.diseased.clone();
    let mut h = s.healthy.clone();
    d.sort_by(f64::total_cmp);
    h.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = d.iter().chain(&h).copied().collect();
    merged.sort_by(f64::total_cmp);
    merged.dedup();

    // compare n_D #H - n_H #D exactly
    let (mut best, mut threshold) = (i64::MIN, merged[0]);
    let (mut id, mut ih) = (0usize, 0usize);
    for &c in &merged {
        while id < d.len() && d[id] <= c {
            id += 1;
        }
        while ih < h.len() && h[ih] <= c {
            ih += 1;
        }
        let v = nd * ih as i64 - nh * id as i64;
        if v > best {
            best = v;
            threshold = c;
        }
    }
    (best as f64 / (nd * nh) as f64, threshold)
}

pub fn summarize(s: &ScoreSample, p_grid: &[f64]) -> Result<RocSummary> {
    let RocCurve { p_grid, roc_values } = roc_curve(s, p_grid)?;
    let (youden, youden_threshold) = youden(s);
    Ok(RocSummary {
        p_grid,
        roc_values,
        auc: auc(s),
        youden,
        youden_threshold,
    })
}

/// Scores of both samples under a fitted index.
pub fn score_sample(
    idx: &DiscriminantIndex,
    d: &FunctionalSample,
    h: &FunctionalSample,
) -> Result<ScoreSample> {
    ScoreSample::new(idx.scores(d)?, idx.scores(h)?)
}
