//! Discriminant indexes mapping a curve to a real score.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::{
    choose_dimension, combine_covariances, eigendecompose, project_scores, sample_covariance,
    sample_mean, score_mean_and_covariance, CombineMode, CovarianceKernel, EigenSystem,
};
use crate::grid::{inner_product, norm, same_grid, Curve, FunctionalSample, Group};
use crate::linalg;

const UNIT_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-10;
const RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum DiscriminantIndex {
    /// Largest value of the curve.
    Max,
    /// Smallest value of the curve.
    Min,
    /// Integral of the curve.
    Integral,
    /// `<beta, x>` with `||beta|| = 1`.
    Linear { beta: Curve },
    /// `-x' Lambda x + 2 alpha' x` on the scores `x` of the first `k`
    /// eigenfunctions of `basis`.
    Quadratic {
        basis: EigenSystem,
        k: usize,
        lambda_mat: DMatrix<f64>,
        alpha_vec: DVector<f64>,
    },
}

impl DiscriminantIndex {
    pub fn linear(beta: Curve) -> Result<Self> {
        if (norm(&beta) - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid("a linear index needs a unit-norm direction"));
        }
        Ok(DiscriminantIndex::Linear { beta })
    }

    pub fn quadratic(
        basis: EigenSystem,
        k: usize,
        lambda_mat: DMatrix<f64>,
        alpha_vec: DVector<f64>,
    ) -> Result<Self> {
        if k == 0 || k > basis.count() {
            return Err(Error::invalid("quadratic index dimension exceeds its basis"));
        }
        if lambda_mat.nrows() != k || lambda_mat.ncols() != k || alpha_vec.len() != k {
            return Err(Error::invalid("quadratic index parameters must be k-dimensional"));
        }
        if !linalg::is_symmetric(&lambda_mat, SYMMETRY_TOL) {
            return Err(Error::invalid("quadratic index matrix must be symmetric"));
        }
        Ok(DiscriminantIndex::Quadratic {
            basis,
            k,
            lambda_mat,
            alpha_vec,
        })
    }

    /// Index value of every curve of a sample.
    pub fn scores(&self, s: &FunctionalSample) -> Result<Vec<f64>> {
        let x = s.values();
        Ok(match self {
            DiscriminantIndex::Max => x
                .row_iter()
                .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
            DiscriminantIndex::Min => x
                .row_iter()
                .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
                .collect(),
            DiscriminantIndex::Integral => {
                let w = s.grid().weight_vector();
                (x * w).iter().copied().collect()
            }
            DiscriminantIndex::Linear { beta } => {
                s.check_grid(beta.grid())?;
                let w = s.grid().weights();
                let wb = DVector::from_iterator(
                    w.len(),
                    w.iter().zip(beta.values()).map(|(w, b)| w * b),
                );
                (x * wb).iter().copied().collect()
            }
            DiscriminantIndex::Quadratic {
                basis,
                k,
                lambda_mat,
                alpha_vec,
            } => {
                let z = project_scores(s, basis, *k)?;
                z.row_iter()
                    .map(|r| {
                        let r = r.transpose();
                        quadratic_score(lambda_mat, alpha_vec, &r)
                    })
                    .collect()
            }
        })
    }
}

fn quadratic_score(lambda_mat: &DMatrix<f64>, alpha_vec: &DVector<f64>, x: &DVector<f64>) -> f64 {
    -x.dot(&(lambda_mat * x)) + 2.0 * alpha_vec.dot(x)
}

/// Value of the index at one curve.
pub fn apply_index(idx: &DiscriminantIndex, x: &Curve) -> Result<f64> {
    let v = x.values();
    match idx {
        DiscriminantIndex::Max => Ok(v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        DiscriminantIndex::Min => Ok(v.iter().copied().fold(f64::INFINITY, f64::min)),
        DiscriminantIndex::Integral => Ok(x.grid().integrate(v)),
        DiscriminantIndex::Linear { beta } => inner_product(beta, x),
        DiscriminantIndex::Quadratic {
            basis,
            k,
            lambda_mat,
            alpha_vec,
        } => {
            if !same_grid(basis.grid(), x.grid()) {
                return Err(Error::GridMismatch);
            }
            let z = basis.coordinates(v, *k);
            Ok(quadratic_score(lambda_mat, alpha_vec, &z))
        }
    }
}

fn check_pair(d: &FunctionalSample, h: &FunctionalSample) -> Result<()> {
    d.check_grid(h.grid())
}

fn require_size(s: &FunctionalSample, needed: usize) -> Result<()> {
    if s.len() < needed {
        return Err(Error::InsufficientSample {
            needed,
            found: s.len(),
            group: Some(s.group()),
        });
    }
    Ok(())
}

/// Linear index along the normalized mean difference `X_D - X_H`.
pub fn fit_mean_difference(d: &FunctionalSample, h: &FunctionalSample) -> Result<DiscriminantIndex> {
    check_pair(d, h)?;
    let diff = sample_mean(d).combine(1.0, &sample_mean(h), -1.0)?;
    let len = norm(&diff);
    if !(len > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    DiscriminantIndex::linear(diff.scaled(1.0 / len))
}

/// Covariance estimate in the denominator of the linear criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMode {
    Pooled,
    #[default]
    Average,
}

/// `lambda * P` added to the reduced covariance, with `P` a `k x k` PSD
/// matrix in basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    lambda: f64,
    penalty_matrix: DMatrix<f64>,
}

impl PenaltySpec {
    pub fn new(lambda: f64, penalty_matrix: DMatrix<f64>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid("penalty weight must be nonnegative"));
        }
        if !linalg::is_symmetric(&penalty_matrix, SYMMETRY_TOL) {
            return Err(Error::invalid("penalty matrix must be symmetric"));
        }
        let eig = penalty_matrix.clone().symmetric_eigen();
        let scale = linalg::max_abs(&penalty_matrix).max(1.0);
        if eig.eigenvalues.iter().any(|l| *l < -SYMMETRY_TOL * scale) {
            return Err(Error::invalid("penalty matrix must be positive semidefinite"));
        }
        Ok(PenaltySpec {
            lambda,
            penalty_matrix,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn penalty_matrix(&self) -> &DMatrix<f64> {
        &self.penalty_matrix
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Penalty {
    #[default]
    None,
    /// Squared norm of the second derivative, built from the fitted basis.
    SecondDifference { lambda: f64 },
    /// A ready-made penalty; its matrix must match the selected dimension.
    Explicit(PenaltySpec),
}

/// Gram matrix `<D phi_l, D phi_r>` of second derivatives of the first `k`
/// eigenfunctions, using three-point differences at interior grid points.
pub fn second_difference_penalty(basis: &EigenSystem, k: usize) -> Result<DMatrix<f64>> {
    let t = basis.grid().points();
    let m = t.len();
    if m < 3 {
        return Err(Error::invalid("second differences need at least three grid points"));
    }
    if k == 0 || k > basis.count() {
        return Err(Error::invalid("penalty dimension exceeds the basis"));
    }
    let phi = basis.eigenfunctions();
    let mut d2 = DMatrix::zeros(m - 2, k);
    let mut w = DVector::zeros(m - 2);
    for i in 1..m - 1 {
        let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        w[i - 1] = 0.5 * (h0 + h1);
        for l in 0..k {
            let (a, b, c) = (phi[(i - 1, l)], phi[(i, l)], phi[(i + 1, l)]);
            d2[(i - 1, l)] = 2.0 * (h1 * a - (h0 + h1) * b + h0 * c) / (h0 * h1 * (h0 + h1));
        }
    }
    let wd2 = DMatrix::from_fn(m - 2, k, |i, l| w[i] * d2[(i, l)]);
    let mut p = d2.tr_mul(&wd2);
    linalg::symmetrize(&mut p);
    Ok(p)
}

/// Options of the estimated AUC-optimal linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOptions {
    pub mode: CovarianceMode,
    pub var_fraction: f64,
    pub penalty: Penalty,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            mode: CovarianceMode::Average,
            var_fraction: 0.95,
            penalty: Penalty::None,
        }
    }
}

fn pooled_basis(
    d: &FunctionalSample,
    h: &FunctionalSample,
    var_fraction: f64,
) -> Result<(CovarianceKernel, CovarianceKernel, EigenSystem, usize)> {
    let gd = sample_covariance(d)?;
    let gh = sample_covariance(h)?;
    let pool = combine_covariances(
        &gd,
        &gh,
        CombineMode::Pooled {
            n_a: d.len(),
            n_b: h.len(),
        },
    )?;
    let full = eigendecompose(&pool, pool.grid().len())?;
    let k = choose_dimension(&full, var_fraction)?;
    Ok((gd, gh, full.truncated(k)?, k))
}

/// Estimated AUC-optimal linear index.
///
/// The direction maximizes `b' delta / sqrt(b' (G + lambda P) b)` over the
/// span of the leading eigenfunctions of the pooled sample covariance, where
/// `delta` and `G` are the mean difference and the covariance (pooled or
/// averaged per `mode`) in that basis. The maximizer is
/// `(G + lambda P)^{-1} delta` up to a positive factor.
pub fn fit_optimal_linear(
    d: &FunctionalSample,
    h: &FunctionalSample,
    mode: CovarianceMode,
    var_fraction: f64,
    penalty: &Penalty,
) -> Result<DiscriminantIndex> {
    check_pair(d, h)?;
    require_size(d, 2)?;
    require_size(h, 2)?;
    let (gd, gh, basis, k) = pooled_basis(d, h, var_fraction)?;
    let gamma = match mode {
        CovarianceMode::Pooled => combine_covariances(
            &gd,
            &gh,
            CombineMode::Pooled {
                n_a: d.len(),
                n_b: h.len(),
            },
        )?,
        CovarianceMode::Average => combine_covariances(&gd, &gh, CombineMode::Average)?,
    };

    let diff = sample_mean(d).combine(1.0, &sample_mean(h), -1.0)?;
    let delta = basis.coordinates(diff.values(), k);
    if !(delta.norm() > 0.0) {
        return Err(Error::DegenerateDirection);
    }

    let w = basis.grid().weights();
    let phi = basis.eigenfunctions();
    let wphi = DMatrix::from_fn(phi.nrows(), k, |i, l| w[i] * phi[(i, l)]);
    let mut g = wphi.tr_mul(&(gamma.matrix() * &wphi));
    match penalty {
        Penalty::None => {}
        Penalty::SecondDifference { lambda } => {
            if !(*lambda >= 0.0) || !lambda.is_finite() {
                return Err(Error::invalid("penalty weight must be nonnegative"));
            }
            if *lambda > 0.0 {
                g += second_difference_penalty(&basis, k)? * *lambda;
            }
        }
        Penalty::Explicit(spec) => {
            if spec.penalty_matrix.nrows() != k {
                return Err(Error::invalid(alloc::format!(
                    "penalty matrix is {0}x{0} but {k} components were selected",
                    spec.penalty_matrix.nrows()
                )));
            }
            g += &spec.penalty_matrix * spec.lambda;
        }
    }
    linalg::symmetrize(&mut g);

    let b = linalg::spd_solve(&g, &delta, RCOND).ok_or_else(|| {
        Error::SingularSystem(alloc::format!("reduced {k}x{k} covariance is numerically singular"))
    })?;
    let mut beta = basis.synthesize(b.as_slice())?;
    let len = norm(&beta);
    if !(len > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    if b.dot(&delta) < 0.0 {
        beta = beta.scaled(-1.0);
    }
    DiscriminantIndex::linear(beta.scaled(1.0 / len))
}

/// Estimated quadratic index on the leading pooled eigenfunctions.
///
/// With `S_j = Sigma_j + ridge I` the score covariances (divisor `n_j`),
/// `Lambda = S_D^{-1} - S_H^{-1}` and `alpha = S_D^{-1} mu_D - S_H^{-1} mu_H`.
pub fn fit_quadratic(
    d: &FunctionalSample,
    h: &FunctionalSample,
    var_fraction: f64,
    ridge: f64,
) -> Result<DiscriminantIndex> {
    check_pair(d, h)?;
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::invalid("ridge must be nonnegative"));
    }
    require_size(d, 2)?;
    require_size(h, 2)?;
    let (_, _, basis, k) = pooled_basis(d, h, var_fraction)?;
    require_size(d, k + 1)?;
    require_size(h, k + 1)?;

    let moments = |s: &FunctionalSample| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let z = project_scores(s, &basis, k)?;
        let (mu, mut sigma) = score_mean_and_covariance(&z);
        for i in 0..k {
            sigma[(i, i)] += ridge;
        }
        let inv = linalg::spd_inverse(&sigma, RCOND)
            .ok_or(Error::SingularCovariance { group: s.group() })?;
        Ok((mu, inv))
    };
    let (mu_d, inv_d) = moments(d)?;
    let (mu_h, inv_h) = moments(h)?;
    let mut lambda_mat = &inv_d - &inv_h;
    linalg::symmetrize(&mut lambda_mat);
    let alpha_vec = &inv_d * mu_d - &inv_h * mu_h;
    DiscriminantIndex::quadratic(basis, k, lambda_mat, alpha_vec)
}

/// `Lambda_0 = Sigma_D^{-1} - Sigma_H^{-1}` and
/// `alpha_0 = Sigma_D^{-1} mu_D - Sigma_H^{-1} mu_H`.
pub fn quadratic_population(
    mu_d: &DVector<f64>,
    mu_h: &DVector<f64>,
    sigma_d: &DMatrix<f64>,
    sigma_h: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let k = mu_d.len();
    if mu_h.len() != k || sigma_d.shape() != (k, k) || sigma_h.shape() != (k, k) {
        return Err(Error::invalid("population parameters have mismatched dimensions"));
    }
    let inverse = |s: &DMatrix<f64>, g: Group| -> Result<DMatrix<f64>> {
        if !linalg::is_symmetric(s, SYMMETRY_TOL) {
            return Err(Error::invalid(alloc::format!("{g} covariance is not symmetric")));
        }
        let chol = linalg::cholesky(s.clone())
            .ok_or_else(|| Error::invalid(alloc::format!("{g} covariance is not positive definite")))?;
        let mut inv = chol.inverse();
        linalg::symmetrize(&mut inv);
        Ok(inv)
    };
    let inv_d = inverse(sigma_d, Group::Diseased)?;
    let inv_h = inverse(sigma_h, Group::Healthy)?;
    let mut lambda = &inv_d - &inv_h;
    linalg::symmetrize(&mut lambda);
    let alpha = &inv_d * mu_d - &inv_h * mu_h;
    Ok((lambda, alpha))
}
