//! Closed-form results for two multivariate normal populations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::normal;
use crate::roc::ScoreSample;

const SPD_TOL: f64 = 1e-10;

/// `x_D ~ N(mu_d, sigma_d)` and `x_H ~ N(mu_h, sigma_h)` with prevalence
/// `pi_d` of the diseased group.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    mu_d: DVector<f64>,
    mu_h: DVector<f64>,
    sigma_d: DMatrix<f64>,
    sigma_h: DMatrix<f64>,
    pi_d: f64,
}

fn check_spd(s: &DMatrix<f64>, what: &str) -> Result<()> {
    if !linalg::is_symmetric(s, SPD_TOL) || !linalg::is_positive_definite(s) {
        return Err(Error::invalid(alloc::format!(
            "{what} covariance must be symmetric positive definite"
        )));
    }
    Ok(())
}

impl GaussianPair {
    pub fn new(
        mu_d: DVector<f64>,
        mu_h: DVector<f64>,
        sigma_d: DMatrix<f64>,
        sigma_h: DMatrix<f64>,
        pi_d: f64,
    ) -> Result<Self> {
        let k = mu_d.len();
        if k == 0 || mu_h.len() != k || sigma_d.shape() != (k, k) || sigma_h.shape() != (k, k) {
            return Err(Error::invalid("binormal parameters have mismatched dimensions"));
        }
        if !(pi_d > 0.0 && pi_d < 1.0) {
            return Err(Error::invalid("prevalence must lie in (0, 1)"));
        }
        if mu_d.iter().chain(mu_h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("means must be finite"));
        }
        check_spd(&sigma_d, "diseased")?;
        check_spd(&sigma_h, "healthy")?;
        Ok(GaussianPair {
            mu_d,
            mu_h,
            sigma_d,
            sigma_h,
            pi_d,
        })
    }

    /// Equal covariances and prevalence one half.
    pub fn homoscedastic(mu_d: DVector<f64>, mu_h: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        GaussianPair::new(mu_d, mu_h, sigma.clone(), sigma, 0.5)
    }

    pub fn with_prevalence(mut self, pi_d: f64) -> Result<Self> {
        if !(pi_d > 0.0 && pi_d < 1.0) {
            return Err(Error::invalid("prevalence must lie in (0, 1)"));
        }
        self.pi_d = pi_d;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mu_d.len()
    }

    pub fn mu_d(&self) -> &DVector<f64> {
        &self.mu_d
    }

    pub fn mu_h(&self) -> &DVector<f64> {
        &self.mu_h
    }

    pub fn sigma_d(&self) -> &DMatrix<f64> {
        &self.sigma_d
    }

    pub fn sigma_h(&self) -> &DMatrix<f64> {
        &self.sigma_h
    }

    pub fn pi_d(&self) -> f64 {
        self.pi_d
    }

    fn delta(&self) -> DVector<f64> {
        &self.mu_d - &self.mu_h
    }

    fn check_direction(&self, beta: &DVector<f64>) -> Result<()> {
        if beta.len() != self.dim() {
            return Err(Error::invalid("direction has the wrong dimension"));
        }
        if !(beta.norm() > 0.0) || beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("direction must be a finite nonzero vector"));
        }
        Ok(())
    }
}

fn quad(beta: &DVector<f64>, s: &DMatrix<f64>) -> f64 {
    beta.dot(&(s * beta))
}

fn solve_spd(s: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = linalg::cholesky(s.clone()).ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
    Ok(chol.solve(b))
}

fn unit(v: DVector<f64>) -> Result<DVector<f64>> {
    let n = v.norm();
    if !(n > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    Ok(v / n)
}

/// `Phi(beta' Delta / sqrt(beta' (Sigma_D + Sigma_H) beta))`.
pub fn auc_of_direction(g: &GaussianPair, beta: &DVector<f64>) -> Result<f64> {
    g.check_direction(beta)?;
    let num = beta.dot(&g.delta());
    let den = libm::sqrt(quad(beta, &g.sigma_d) + quad(beta, &g.sigma_h));
    Ok(normal::cdf(num / den))
}

/// Unit vector along `(Sigma_D + Sigma_H)^{-1} (mu_D - mu_H)`.
pub fn optimal_auc_direction(g: &GaussianPair) -> Result<DVector<f64>> {
    let delta = g.delta();
    if delta.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateDirection);
    }
    unit(solve_spd(&(&g.sigma_d + &g.sigma_h), &delta)?)
}

/// `Phi(sqrt(Delta' (Sigma_D + Sigma_H)^{-1} Delta))`, the largest AUC of a
/// linear score.
pub fn max_auc(g: &GaussianPair) -> Result<f64> {
    let delta = g.delta();
    let q = delta.dot(&solve_spd(&(&g.sigma_d + &g.sigma_h), &delta)?);
    Ok(normal::cdf(libm::sqrt(q.max(0.0))))
}

/// ROC curve of the score `beta' x` at `p`:
/// `1 - Phi((beta'(mu_H - mu_D) + sqrt(beta' Sigma_H beta) z_p) / sqrt(beta' Sigma_D beta))`
/// with `Phi(z_p) = 1 - p`.
pub fn binormal_roc(g: &GaussianPair, beta: &DVector<f64>, p: f64) -> Result<f64> {
    g.check_direction(beta)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("ROC argument must lie in (0, 1)"));
    }
    let z_p = -normal::quantile(p);
    let sd = libm::sqrt(quad(beta, &g.sigma_d));
    let sh = libm::sqrt(quad(beta, &g.sigma_h));
    let arg = (beta.dot(&(&g.mu_h - &g.mu_d)) + sh * z_p) / sd;
    Ok(normal::cdf(-arg))
}

fn equal_covariance(g: &GaussianPair) -> Result<()> {
    let scale = linalg::max_abs(&g.sigma_d).max(linalg::max_abs(&g.sigma_h)).max(1.0);
    if linalg::max_abs(&(&g.sigma_d - &g.sigma_h)) > SPD_TOL * scale {
        return Err(Error::Precondition(
            "the Youden-optimal direction needs equal covariances".into(),
        ));
    }
    Ok(())
}

/// Unit vector along `Sigma^{-1} Delta` for a common covariance `Sigma`.
pub fn youden_direction(g: &GaussianPair) -> Result<DVector<f64>> {
    equal_covariance(g)?;
    let delta = g.delta();
    if delta.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateDirection);
    }
    unit(solve_spd(&g.sigma_d, &delta)?)
}

/// Threshold `beta' (mu_D + mu_H) / 2` maximizing `F_H(c) - F_D(c)` for the
/// score `beta' x` under equal covariances.
pub fn youden_threshold(g: &GaussianPair, beta: &DVector<f64>) -> Result<f64> {
    g.check_direction(beta)?;
    Ok(0.5 * beta.dot(&(&g.mu_d + &g.mu_h)))
}

/// Youden index `2 Phi(L / 2) - 1` of the score `beta' x` under equal
/// covariances, with `L = beta' Delta / sqrt(beta' Sigma beta)`.
pub fn youden_value(g: &GaussianPair, beta: &DVector<f64>) -> Result<f64> {
    g.check_direction(beta)?;
    equal_covariance(g)?;
    let l = beta.dot(&g.delta()) / libm::sqrt(quad(beta, &g.sigma_d));
    Ok(2.0 * normal::cdf(0.5 * l.max(0.0)) - 1.0)
}

/// Squared correlation between `beta' x` and the group indicator under the
/// mixture with prevalence `pi_D`.
///
/// The first value comes from the mixture moments; the second is the closed
/// form `2 pi_D pi_H L^2 / (1 + 2 pi_D pi_H L^2)` with
/// `L = beta' Delta / sqrt(2 beta' Gamma_pool beta)`.
pub fn pool_correlation_identity(g: &GaussianPair, beta: &DVector<f64>) -> Result<(f64, f64)> {
    g.check_direction(beta)?;
    let (pd, ph) = (g.pi_d, 1.0 - g.pi_d);
    let (md, mh) = (beta.dot(&g.mu_d), beta.dot(&g.mu_h));
    let (vd, vh) = (quad(beta, &g.sigma_d), quad(beta, &g.sigma_h));

    let ey = pd * md + ph * mh;
    let ey2 = pd * (vd + md * md) + ph * (vh + mh * mh);
    let var_y = ey2 - ey * ey;
    let cov = pd * md - ey * pd;
    let lhs = cov * cov / (var_y * pd * ph);

    let pool = pd * vd + ph * vh;
    let l2 = (md - mh) * (md - mh) / (2.0 * pool);
    let rhs = 2.0 * pd * ph * l2 / (1.0 + 2.0 * pd * ph * l2);
    Ok((lhs, rhs))
}

/// Coordinates `sqrt(pi_D pi_H) delta_l / lambda_l` of the maximizer of the
/// pooled criterion in the eigenbasis of `Gamma`.
pub fn pooled_criterion_direction(mu_diff: &[f64], eigenvalues: &[f64], pi_d: f64) -> Result<DVector<f64>> {
    if mu_diff.len() != eigenvalues.len() || mu_diff.is_empty() {
        return Err(Error::invalid("mean difference and eigenvalues must have equal length"));
    }
    if !(pi_d > 0.0 && pi_d < 1.0) {
        return Err(Error::invalid("prevalence must lie in (0, 1)"));
    }
    if let Some(l) = eigenvalues.iter().position(|l| !(*l > 0.0)) {
        return Err(Error::RangeViolation(alloc::format!(
            "eigenvalue {l} is not positive, so the inverse is undefined there"
        )));
    }
    if mu_diff.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let c = libm::sqrt(pi_d * (1.0 - pi_d));
    Ok(DVector::from_iterator(
        mu_diff.len(),
        mu_diff.iter().zip(eigenvalues).map(|(d, l)| c * d / l),
    ))
}

/// Independent draws from both populations; rows are observations.
#[derive(Debug, Clone)]
pub struct BinormalSampler {
    pair: GaussianPair,
    chol_d: Cholesky<f64, Dyn>,
    chol_h: Cholesky<f64, Dyn>,
}

impl BinormalSampler {
    pub fn new(pair: GaussianPair) -> Result<Self> {
        let chol_d = linalg::cholesky(pair.sigma_d.clone())
            .ok_or_else(|| Error::invalid("diseased covariance is not positive definite"))?;
        let chol_h = linalg::cholesky(pair.sigma_h.clone())
            .ok_or_else(|| Error::invalid("healthy covariance is not positive definite"))?;
        Ok(BinormalSampler { pair, chol_d, chol_h })
    }

    pub fn pair(&self) -> &GaussianPair {
        &self.pair
    }

    fn draw<R: Rng + ?Sized>(
        mu: &DVector<f64>,
        chol: &Cholesky<f64, Dyn>,
        n: usize,
        rng: &mut R,
    ) -> DMatrix<f64> {
        let k = mu.len();
        let l = chol.l();
        let z = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = z * l.transpose();
        for mut row in x.row_iter_mut() {
            row += mu.transpose();
        }
        x
    }

    /// `(n_d x k, n_h x k)` samples, diseased first.
    pub fn sample<R: Rng + ?Sized>(&self, n_d: usize, n_h: usize, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = Self::draw(&self.pair.mu_d, &self.chol_d, n_d, rng);
        let h = Self::draw(&self.pair.mu_h, &self.chol_h, n_h, rng);
        (d, h)
    }

    /// Scores `beta' x` of fresh draws.
    pub fn sample_scores<R: Rng + ?Sized>(
        &self,
        beta: &DVector<f64>,
        n_d: usize,
        n_h: usize,
        rng: &mut R,
    ) -> Result<ScoreSample> {
        self.pair.check_direction(beta)?;
        let (d, h) = self.sample(n_d, n_h, rng);
        ScoreSample::new((d * beta).iter().copied().collect(), (h * beta).iter().copied().collect())
    }
}
