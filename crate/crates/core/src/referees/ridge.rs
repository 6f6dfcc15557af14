//! Ridge regression with leave-one-out selection of the penalty, and the
//! one-vs-rest ridge classifier on raw time points.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// `10^-3 .. 10^3`, ten log-spaced values.
pub fn default_alphas() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0)).collect()
}

/// Fitted multi-output ridge model `y = x W + b`.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    /// `p x q` coefficients.
    pub coef: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub alpha: f64,
    /// Leave-one-out squared error at each candidate alpha (`inf` when skipped).
    pub loo_errors: Vec<f64>,
}

impl RidgeFit {
    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        (0..self.coef.ncols())
            .map(|c| {
                let col = self.coef.column(c);
                self.intercept[c] + x.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

/// Fit ridge regression for every alpha and keep the one with the lowest
/// leave-one-out squared error (first one on ties).
///
/// The intercept, when fitted, is not penalized. The fit goes through the
/// eigendecomposition of the smaller Gram matrix, so wide feature matrices cost
/// `O(n^2 p)`.
pub fn fit_ridge_cv(x: &DMatrix<f64>, y: &DMatrix<f64>, alphas: &[f64], fit_intercept: bool) -> Result<RidgeFit> {
    let (n, p) = x.shape();
    if y.nrows() != n {
        return Err(Error::dimension("ridge target rows", n, y.nrows()));
    }
    if n == 0 || p == 0 {
        return Err(Error::Training("empty design matrix".to_string()));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::Training(format!(
            "regularization grid must be non-empty, finite and non-negative: {alphas:?}"
        )));
    }

    let (x_mean, y_mean) = if fit_intercept {
        (x.row_mean(), y.row_mean())
    } else {
        (nalgebra::RowDVector::zeros(p), nalgebra::RowDVector::zeros(y.ncols()))
    };
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= &x_mean;
    }
    let mut yc = y.clone();
    for mut row in yc.row_iter_mut() {
        row -= &y_mean;
    }
    if xc.amax() == 0.0 {
        return Err(Error::Training(
            "degenerate feature matrix: no feature varies across instances".to_string(),
        ));
    }

    // Left singular vectors `u` and squared singular values `s2` of xc.
    let (u, s2) = if p <= n {
        let eig = SymmetricEigen::new(xc.transpose() * &xc);
        let keep = kept_components(&eig.eigenvalues, n.max(p));
        let mut u = DMatrix::zeros(n, keep.len());
        let mut s2 = DVector::zeros(keep.len());
        for (c, &j) in keep.iter().enumerate() {
            let s = eig.eigenvalues[j].sqrt();
            u.set_column(c, &(&xc * eig.eigenvectors.column(j) / s));
            s2[c] = eig.eigenvalues[j];
        }
        (u, s2)
    } else {
        let eig = SymmetricEigen::new(&xc * xc.transpose());
        let keep = kept_components(&eig.eigenvalues, n.max(p));
        let mut u = DMatrix::zeros(n, keep.len());
        let mut s2 = DVector::zeros(keep.len());
        for (c, &j) in keep.iter().enumerate() {
            u.set_column(c, &eig.eigenvectors.column(j));
            s2[c] = eig.eigenvalues[j];
        }
        (u, s2)
    };
    let rank = s2.len();
    let uty = u.transpose() * &yc;
    let u_sq = u.map(|v| v * v);

    let mut loo_errors = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if alpha == 0.0 && rank < p {
            // X^T X is singular; no unique solution at this grid point.
            loo_errors.push(f64::INFINITY);
            continue;
        }
        let shrink = s2.map(|s| s / (s + alpha));
        let fitted = &u * DMatrix::from_diagonal(&shrink) * &uty;
        let hat = &u_sq * &shrink;
        let mut total = 0.0;
        for i in 0..n {
            let h = hat[i] + if fit_intercept { 1.0 / n as f64 } else { 0.0 };
            let denom = (1.0 - h).max(1e-12);
            for c in 0..y.ncols() {
                let e = (yc[(i, c)] - fitted[(i, c)]) / denom;
                total += e * e;
            }
        }
        loo_errors.push(total);
    }
    let (best, _) =
        loo_errors.iter().enumerate().fold(
            (usize::MAX, f64::INFINITY),
            |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc },
        );
    if best == usize::MAX {
        return Err(Error::Training(
            "normal equations are singular at every regularization value".to_string(),
        ));
    }
    let alpha = alphas[best];
    let inv = s2.map(|s| 1.0 / (s + alpha));
    let coef = xc.transpose() * (&u * (DMatrix::from_diagonal(&inv) * &uty));
    let intercept = (y_mean - x_mean * &coef).transpose();
    Ok(RidgeFit {
        coef,
        intercept,
        alpha,
        loo_errors,
    })
}

fn kept_components(eigenvalues: &DVector<f64>, dim: usize) -> Vec<usize> {
    let max = eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = max * dim as f64 * f64::EPSILON;
    (0..eigenvalues.len()).filter(|&j| eigenvalues[j] > tol).collect()
}

/// `n x C` target matrix with `+1` on the true class and `-1` elsewhere.
pub(crate) fn one_vs_rest_targets(labels: &[usize], num_classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        labels.len(),
        num_classes,
        |i, c| if labels[i] == c { 1.0 } else { -1.0 },
    )
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One-vs-rest ridge classifier on the raw time points.
#[derive(Debug, Clone)]
pub struct RidgeRawClassifier {
    fit: RidgeFit,
}

impl RidgeRawClassifier {
    pub fn fit(train: &LabeledDataset, alphas: &[f64]) -> Result<Self> {
        let n = train.len();
        let d = train.series_len();
        let x = DMatrix::from_fn(n, d, |i, j| train.series()[i].values()[j]);
        let y = one_vs_rest_targets(train.labels(), train.num_classes());
        Ok(RidgeRawClassifier {
            fit: fit_ridge_cv(&x, &y, alphas, true)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.fit.alpha
    }

    /// Coefficient vector (length `d`) of one class.
    pub fn coefficients(&self, class: usize) -> Vec<f64> {
        self.fit.coef.column(class).iter().copied().collect()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.fit.predict_row(x)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }
}
