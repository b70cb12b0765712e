//! Sample means, covariance operators and functional principal components.
//!
//! A covariance operator on the grid is stored as the kernel matrix
//! `K[i][j] ~ gamma(t_i, t_j)`. Applied to a curve it acts as `K W f` with `W`
//! the diagonal of quadrature weights, so its eigenproblem is solved in the
//! symmetrized form `W^{1/2} K W^{1/2} v = lambda v` and mapped back with
//! `phi = W^{-1/2} v`. The resulting eigenfunctions are orthonormal for the
//! quadrature inner product.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{same_grid, Curve, FunctionalSample, Grid};
use crate::linalg;

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

/// Discretized covariance operator.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceKernel {
    grid: Arc<Grid>,
    matrix: DMatrix<f64>,
}

impl CovarianceKernel {
    pub fn new(grid: Arc<Grid>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(Error::InvalidKernel(alloc::format!(
                "kernel is {}x{} but the grid has {} points",
                matrix.nrows(),
                matrix.ncols(),
                grid.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel("non-finite entry".into()));
        }
        if !linalg::is_symmetric(&matrix, SYMMETRY_TOL) {
            return Err(Error::InvalidKernel("matrix is not symmetric".into()));
        }
        Ok(CovarianceKernel { grid, matrix })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scaled(&self, c: f64) -> CovarianceKernel {
        CovarianceKernel {
            grid: self.grid.clone(),
            matrix: &self.matrix * c,
        }
    }

    /// `<f, Gamma g>` under the quadrature rule.
    pub fn quadratic_form(&self, f: &Curve, g: &Curve) -> Result<f64> {
        if !same_grid(&self.grid, f.grid()) || !same_grid(&self.grid, g.grid()) {
            return Err(Error::GridMismatch);
        }
        let w = self.grid.weights();
        let wf = DVector::from_iterator(w.len(), w.iter().zip(f.values()).map(|(w, v)| w * v));
        let wg = DVector::from_iterator(w.len(), w.iter().zip(g.values()).map(|(w, v)| w * v));
        Ok(wf.dot(&(&self.matrix * wg)))
    }
}

/// Leading eigenpairs of a covariance operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    /// `m x count`, column `l` holds the `l`-th eigenfunction on the grid.
    eigenfunctions: DMatrix<f64>,
}

impl EigenSystem {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenfunction(&self, l: usize) -> Curve {
        let values = self.eigenfunctions.column(l).iter().copied().collect();
        Curve::from_parts_unchecked(self.grid.clone(), values)
    }

    /// Keeps the first `k` pairs.
    pub fn truncated(&self, k: usize) -> Result<EigenSystem> {
        if k == 0 || k > self.count() {
            return Err(Error::invalid(alloc::format!(
                "cannot keep {k} of {} eigenpairs",
                self.count()
            )));
        }
        Ok(EigenSystem {
            grid: self.grid.clone(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenfunctions: self.eigenfunctions.columns(0, k).into_owned(),
        })
    }

    /// `sum_l c_l phi_l` for the first `coefficients.len()` eigenfunctions.
    pub fn synthesize(&self, coefficients: &[f64]) -> Result<Curve> {
        if coefficients.len() > self.count() {
            return Err(Error::invalid("more coefficients than eigenfunctions"));
        }
        let k = coefficients.len();
        let c = DVector::from_column_slice(coefficients);
        let values = self.eigenfunctions.columns(0, k) * c;
        Ok(Curve::from_parts_unchecked(
            self.grid.clone(),
            values.iter().copied().collect(),
        ))
    }

    /// Coordinates `<phi_l, x>` of arbitrary grid values in the first `k`
    /// eigenfunctions.
    pub(crate) fn coordinates(&self, values: &[f64], k: usize) -> DVector<f64> {
        let w = self.grid.weights();
        let wx = DVector::from_iterator(w.len(), w.iter().zip(values).map(|(w, v)| w * v));
        self.eigenfunctions.columns(0, k).tr_mul(&wx)
    }
}

/// Pointwise mean curve.
pub fn sample_mean(s: &FunctionalSample) -> Curve {
    let n = s.len() as f64;
    let values = s
        .values()
        .column_iter()
        .map(|col| col.sum() / n)
        .collect();
    Curve::from_parts_unchecked(s.grid().clone(), values)
}

/// Sample covariance kernel with divisor `n`.
pub fn sample_covariance(s: &FunctionalSample) -> Result<CovarianceKernel> {
    if s.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            found: s.len(),
            group: Some(s.group()),
        });
    }
    let mean = sample_mean(s);
    let mut centered = s.values().clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mu = mean.values()[j];
        col.iter_mut().for_each(|v| *v -= mu);
    }
    let mut matrix = centered.tr_mul(&centered) / s.len() as f64;
    linalg::symmetrize(&mut matrix);
    Ok(CovarianceKernel {
        grid: s.grid().clone(),
        matrix,
    })
}

/// How two group covariances are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CombineMode {
    /// Weights `n_a / n` and `n_b / n`.
    Pooled { n_a: usize, n_b: usize },
    /// Equal weights.
    Average,
}

pub fn combine_covariances(
    a: &CovarianceKernel,
    b: &CovarianceKernel,
    mode: CombineMode,
) -> Result<CovarianceKernel> {
    if !same_grid(&a.grid, &b.grid) {
        return Err(Error::GridMismatch);
    }
    let (wa, wb) = match mode {
        CombineMode::Pooled { n_a, n_b } => {
            let n = n_a + n_b;
            if n == 0 {
                return Err(Error::invalid("pooled weights need a positive total size"));
            }
            (n_a as f64 / n as f64, n_b as f64 / n as f64)
        }
        CombineMode::Average => (0.5, 0.5),
    };
    Ok(CovarianceKernel {
        grid: a.grid.clone(),
        matrix: &a.matrix * wa + &b.matrix * wb,
    })
}

/// Leading `count` eigenpairs of the operator `f -> K W f`.
///
/// Eigenvalues are sorted nonincreasing with roundoff negatives clipped to
/// zero; each eigenfunction is signed so its largest-magnitude coordinate is
/// positive.
pub fn eigendecompose(k: &CovarianceKernel, count: usize) -> Result<EigenSystem> {
    let m = k.grid.len();
    if count == 0 || count > m {
        return Err(Error::invalid(alloc::format!(
            "requested {count} eigenpairs on a grid of {m} points"
        )));
    }
    if !linalg::is_symmetric(&k.matrix, SYMMETRY_TOL) {
        return Err(Error::InvalidKernel("matrix is not symmetric".into()));
    }
    let sqrt_w: Vec<f64> = k.grid.weights().iter().map(|w| libm::sqrt(*w)).collect();
    let mut sym = DMatrix::from_fn(m, m, |i, j| sqrt_w[i] * k.matrix[(i, j)] * sqrt_w[j]);
    linalg::symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let largest = eig.eigenvalues[order[0]];
    let smallest = eig.eigenvalues[order[m - 1]];
    if smallest < -PSD_TOL * largest.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidKernel(alloc::format!(
            "operator is not positive semidefinite (eigenvalue {smallest:e} vs {largest:e})"
        )));
    }

    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenfunctions = DMatrix::zeros(m, count);
    for (l, &idx) in order.iter().take(count).enumerate() {
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        let v = eig.eigenvectors.column(idx);
        let mut col: Vec<f64> = v.iter().zip(&sqrt_w).map(|(v, s)| v / s).collect();
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        eigenfunctions.set_column(l, &DVector::from_vec(col));
    }
    Ok(EigenSystem {
        grid: k.grid.clone(),
        eigenvalues,
        eigenfunctions,
    })
}

/// Smallest `k` whose leading eigenvalues explain at least `fraction` of the
/// total over every eigenvalue stored in `e`.
pub fn choose_dimension(e: &EigenSystem, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("variance fraction must lie in (0, 1]"));
    }
    let total: f64 = e.eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateOperator);
    }
    let mut acc = 0.0;
    for (i, l) in e.eigenvalues.iter().enumerate() {
        acc += l;
        // relative slack so a fraction that is reached exactly is not missed
        if acc >= fraction * total * (1.0 - 1e-12) {
            return Ok(i + 1);
        }
    }
    Ok(e.count())
}

/// `n x k` matrix of scores `<X_i, phi_l>`.
pub fn project_scores(s: &FunctionalSample, basis: &EigenSystem, k: usize) -> Result<DMatrix<f64>> {
    s.check_grid(&basis.grid)?;
    if k == 0 || k > basis.count() {
        return Err(Error::invalid(alloc::format!(
            "cannot project on {k} of {} eigenfunctions",
            basis.count()
        )));
    }
    let w = basis.grid.weights();
    let mut weighted = s.values().clone();
    for (j, mut col) in weighted.column_iter_mut().enumerate() {
        col.iter_mut().for_each(|v| *v *= w[j]);
    }
    Ok(weighted * basis.eigenfunctions.columns(0, k))
}

pub(crate) fn score_mean_and_covariance(scores: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = scores.nrows() as f64;
    let mean = DVector::from_iterator(scores.ncols(), scores.column_iter().map(|c| c.sum() / n));
    let mut centered = scores.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mu = mean[j];
        col.iter_mut().for_each(|v| *v -= mu);
    }
    let mut cov = centered.tr_mul(&centered) / n;
    linalg::symmetrize(&mut cov);
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, make_uniform_grid, norm, Group};
    use core::f64::consts::{PI, SQRT_2};

    fn uniform(m: usize) -> Arc<Grid> {
        Arc::new(make_uniform_grid(m).unwrap())
    }

    fn brownian_kernel(grid: &Arc<Grid>) -> CovarianceKernel {
        let t = grid.points();
        let m = t.len();
        CovarianceKernel::new(grid.clone(), DMatrix::from_fn(m, m, |i, j| t[i].min(t[j]))).unwrap()
    }

    #[test]
    fn mean_examples() {
        let g = uniform(5);
        let f = alloc::vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let single = FunctionalSample::from_rows(g.clone(), &[f.clone()], Group::Healthy).unwrap();
        assert_eq!(sample_mean(&single).values(), &f[..]);

        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let pair = FunctionalSample::from_rows(g, &[f, neg], Group::Healthy).unwrap();
        assert!(sample_mean(&pair).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn covariance_examples() {
        let g = uniform(4);
        let f = alloc::vec![1.0, 2.0, -1.0, 0.5];
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let pair = FunctionalSample::from_rows(g.clone(), &[f.clone(), neg], Group::Diseased).unwrap();
        let k = sample_covariance(&pair).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((k.matrix()[(i, j)] - f[i] * f[j]).abs() < 1e-14);
            }
        }

        let same = FunctionalSample::from_rows(g.clone(), &[f.clone(), f.clone(), f.clone()], Group::Diseased)
            .unwrap();
        assert!(sample_covariance(&same).unwrap().matrix().iter().all(|v| v.abs() < 1e-15));

        let one = FunctionalSample::from_rows(g, &[f], Group::Diseased).unwrap();
        assert!(matches!(
            sample_covariance(&one),
            Err(Error::InsufficientSample { needed: 2, found: 1, .. })
        ));
    }

    #[test]
    fn combine_examples() {
        let g = uniform(6);
        let k = brownian_kernel(&g);
        let three = k.scaled(3.0);
        assert_eq!(combine_covariances(&k, &k, CombineMode::Average).unwrap(), k);
        let pooled = combine_covariances(&k, &k, CombineMode::Pooled { n_a: 3, n_b: 5 }).unwrap();
        assert!((pooled.matrix() - k.matrix()).abs().max() < 1e-15);

        let avg = combine_covariances(&k, &three, CombineMode::Average).unwrap();
        assert!((avg.matrix() - k.matrix() * 2.0).abs().max() < 1e-15);

        let pooled = combine_covariances(&k, &three, CombineMode::Pooled { n_a: 30, n_b: 250 }).unwrap();
        let expected = k.matrix() * (30.0 / 280.0) + three.matrix() * (250.0 / 280.0);
        assert!((pooled.matrix() - expected).abs().max() < 1e-15);

        let other = brownian_kernel(&uniform(7));
        assert_eq!(
            combine_covariances(&k, &other, CombineMode::Average),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn brownian_spectrum() {
        let g = uniform(500);
        let e = eigendecompose(&brownian_kernel(&g), 3).unwrap();
        let lambda1 = 4.0 / (PI * PI);
        assert!((e.eigenvalues()[0] - lambda1).abs() < 0.002);
        assert!((e.eigenvalues()[0] - lambda1).abs() / lambda1 < 0.005);
        let phi = e.eigenfunction(0);
        for (t, v) in g.points().iter().zip(phi.values()) {
            assert!((v - SQRT_2 * libm::sin(PI * t / 2.0)).abs() < 0.01);
        }
        for l in 0..3 {
            for r in 0..3 {
                let ip = inner_product(&e.eigenfunction(l), &e.eigenfunction(r)).unwrap();
                let expected = if l == r { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_one_kernel() {
        let g = uniform(40);
        let f: Vec<f64> = g.points().iter().map(|t| 1.0 + t * t).collect();
        let k = CovarianceKernel::new(g.clone(), DMatrix::from_fn(40, 40, |i, j| f[i] * f[j])).unwrap();
        let e = eigendecompose(&k, 40).unwrap();
        let fc = Curve::new(g, f).unwrap();
        assert!((e.eigenvalues()[0] - norm(&fc).powi(2)).abs() < 1e-10);
        assert!(e.eigenvalues()[1..].iter().all(|l| l.abs() < 1e-10));
    }

    #[test]
    fn rejects_asymmetric_kernel() {
        let g = uniform(3);
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(CovarianceKernel::new(g, m), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn reconstruction_and_spectrum_invariance() {
        let g = uniform(30);
        let k = brownian_kernel(&g);
        let e = eigendecompose(&k, 30).unwrap();
        let phi = e.eigenfunctions();
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(e.eigenvalues()));
        let rebuilt = phi * lambda * phi.transpose();
        let rel = (rebuilt - k.matrix()).norm() / k.matrix().norm();
        assert!(rel < 1e-6, "relative error {rel}");

        let doubled = combine_covariances(&k, &k, CombineMode::Pooled { n_a: 2, n_b: 9 }).unwrap();
        let e2 = eigendecompose(&doubled, 30).unwrap();
        for (a, b) in e.eigenvalues().iter().zip(e2.eigenvalues()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn choose_dimension_examples() {
        let g = uniform(4);
        let make = |vals: &[f64]| EigenSystem {
            grid: g.clone(),
            eigenvalues: vals.to_vec(),
            eigenfunctions: DMatrix::identity(4, vals.len()),
        };
        assert_eq!(choose_dimension(&make(&[1.0, 0.0, 0.0]), 0.95).unwrap(), 1);
        assert_eq!(choose_dimension(&make(&[0.5, 0.3, 0.15, 0.05]), 0.95).unwrap(), 3);
        assert_eq!(choose_dimension(&make(&[0.5, 0.3, 0.15, 0.05]), 1.0).unwrap(), 4);
        assert_eq!(
            choose_dimension(&make(&[0.0, 0.0]), 0.95),
            Err(Error::DegenerateOperator)
        );
        assert!(choose_dimension(&make(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let g = uniform(60);
        let e = eigendecompose(&brownian_kernel(&g), 5).unwrap();
        let x1 = e.eigenfunction(0);
        let x2 = e.synthesize(&[2.0, 3.0]).unwrap();
        let s = FunctionalSample::from_curves(&[x1, x2], Group::Healthy).unwrap();
        let scores = project_scores(&s, &e, 5).unwrap();
        let expected = [[1.0, 0.0, 0.0, 0.0, 0.0], [2.0, 3.0, 0.0, 0.0, 0.0]];
        for i in 0..2 {
            for l in 0..5 {
                assert!((scores[(i, l)] - expected[i][l]).abs() < 1e-8);
            }
        }
        assert!(project_scores(&s, &e, 6).is_err());
    }

    #[test]
    fn covariance_shift_and_scale() {
        let g = uniform(8);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..8).map(|j| libm::sin(((i * 8 + j) as f64).powi(2))).collect())
            .collect();
        let base = FunctionalSample::from_rows(g.clone(), &rows, Group::Healthy).unwrap();
        let shifted_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| v + 0.3 * j as f64).collect())
            .collect();
        let shifted = FunctionalSample::from_rows(g.clone(), &shifted_rows, Group::Healthy).unwrap();
        let k0 = sample_covariance(&base).unwrap();
        let k1 = sample_covariance(&shifted).unwrap();
        assert!((k0.matrix() - k1.matrix()).abs().max() < 1e-12);

        let scaled_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| 3.0 * v).collect()).collect();
        let scaled = FunctionalSample::from_rows(g, &scaled_rows, Group::Healthy).unwrap();
        let k2 = sample_covariance(&scaled).unwrap();
        assert!((k2.matrix() - k0.matrix() * 9.0).abs().max() < 1e-12);
        let e0 = eigendecompose(&k0, 3).unwrap();
        let e2 = eigendecompose(&k2, 3).unwrap();
        for l in 0..3 {
            assert!((e2.eigenvalues()[l] - 9.0 * e0.eigenvalues()[l]).abs() < 1e-10);
            let ip = inner_product(&e0.eigenfunction(l), &e2.eigenfunction(l)).unwrap();
            assert!((ip.abs() - 1.0).abs() < 1e-8);
        }
    }
}
