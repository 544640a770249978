//! PLSR estimators and the fitted model shared by all of them.

mod bigr;
mod simpls;
mod svd;

pub use bigr::{cost, egrad, fit_plsr_bigr, fit_plsr_bigr_with, BigrOptions, PlsrCost};
pub use simpls::fit_simpls;
pub use svd::{eckart_young_optimum, singular_values, truncated_svd, TruncatedSvd};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, solve_spd, Mat};
use crate::optimizer::Trace;

/// Paired observations: `x` is I×N, `y` is I×M, rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrixPair {
    x: Mat,
    y: Mat,
}

impl DataMatrixPair {
    pub fn new(x: Mat, y: Mat) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 samples, got {}",
                x.nrows()
            )));
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidData(
                "X and Y need at least one column".into(),
            ));
        }
        if !all_finite(&x) || !all_finite(&y) {
            return Err(Error::InvalidData("non-finite entries".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn y(&self) -> &Mat {
        &self.y
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    /// Keeps the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x.select_rows(rows), self.y.select_rows(rows))
    }
}

/// Z = X_cᵀ Y_c together with the column means removed from X and Y.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossProduct {
    pub z: Mat,
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
}

fn column_means(a: &Mat) -> DVector<f64> {
    DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.mean()))
}

fn subtract_row(a: &Mat, mean: &DVector<f64>) -> Mat {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    out
}

/// The column-centered (or raw) data matrices and their means.
pub(crate) struct Centered {
    pub xc: Mat,
    pub yc: Mat,
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
}

pub(crate) fn center(data: &DataMatrixPair, center: bool) -> Result<Centered> {
    if center && data.n_samples() < 2 {
        return Err(Error::InvalidData(
            "centering needs at least 2 samples".into(),
        ));
    }
    let (mean_x, mean_y) = if center {
        (column_means(&data.x), column_means(&data.y))
    } else {
        (
            DVector::zeros(data.x.ncols()),
            DVector::zeros(data.y.ncols()),
        )
    };
    Ok(Centered {
        xc: subtract_row(&data.x, &mean_x),
        yc: subtract_row(&data.y, &mean_y),
        mean_x,
        mean_y,
    })
}

pub fn cross_product(data: &DataMatrixPair, centered: bool) -> Result<CrossProduct> {
    let c = center(data, centered)?;
    Ok(CrossProduct {
        z: c.xc.transpose() * &c.yc,
        mean_x: c.mean_x,
        mean_y: c.mean_y,
    })
}

/// Which estimator produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "bigr")]
    BigrPreconditioned,
    #[serde(rename = "bigr-noprecond")]
    BigrIdentity,
    #[serde(rename = "simpls")]
    Simpls,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::BigrPreconditioned => "bigr",
            Variant::BigrIdentity => "bigr-noprecond",
            Variant::Simpls => "simpls",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bigr" => Some(Variant::BigrPreconditioned),
            "bigr-noprecond" => Some(Variant::BigrIdentity),
            "simpls" => Some(Variant::Simpls),
            _ => None,
        }
    }

    pub fn metric_mode(self) -> Option<crate::manifold::MetricMode> {
        use crate::manifold::MetricMode;
        match self {
            Variant::BigrPreconditioned => Some(MetricMode::Preconditioned),
            Variant::BigrIdentity => Some(MetricMode::Identity),
            Variant::Simpls => None,
        }
    }
}

/// A fitted PLSR model.
///
/// For the manifold variants `u`, `v` are the learned orthonormal subspaces
/// and `s` the core factor. For SIMPLS `u` holds the X weights (scaled so the
/// scores are orthonormal), `v` the Y loadings and `s` the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsrModel {
    pub variant: Variant,
    pub u: Mat,
    pub v: Mat,
    pub s: Mat,
    /// N×M regression coefficients.
    pub coeffs: Mat,
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    pub trace: Trace,
}

impl PlsrModel {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn n_targets(&self) -> usize {
        self.coeffs.ncols()
    }

    /// (x_new − mean_x)·C + mean_y
    pub fn predict(&self, x_new: &Mat) -> Result<Mat> {
        predict(self, x_new)
    }
}

pub fn predict(model: &PlsrModel, x_new: &Mat) -> Result<Mat> {
    if x_new.ncols() != model.n_features() {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} features, input has {}",
            model.n_features(),
            x_new.ncols()
        )));
    }
    let mut y = subtract_row(x_new, &model.mean_x) * &model.coeffs;
    for (j, mut col) in y.column_iter_mut().enumerate() {
        col.add_scalar_mut(model.mean_y[j]);
    }
    Ok(y)
}

/// Least-squares map from latent scores to centered targets, `(TᵀT + λI)⁻¹TᵀY_c`
/// with `λ = 1e-10·tr(TᵀT)/R`.
pub(crate) fn score_regression(t: &Mat, yc: &Mat) -> Mat {
    let gram = t.transpose() * t;
    let r = gram.nrows();
    let trace = gram.trace();
    if !(trace > 0.0) {
        return Mat::zeros(r, yc.ncols());
    }
    let ridge = 1e-10 * trace / r as f64;
    solve_spd(&gram, &(t.transpose() * yc), ridge).unwrap_or_else(|| Mat::zeros(r, yc.ncols()))
}

/// Loadings and residuals of both blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// X scores T = X_c U
    pub t: Mat,
    /// Y scores B = Y_c V
    pub b: Mat,
    pub p: Mat,
    pub q: Mat,
    pub e: Mat,
    pub f: Mat,
}

/// `M_cᵀ S (SᵀS)⁻¹`, falling back to a small ridge when SᵀS is singular.
fn loadings(block: &Mat, scores: &Mat) -> Result<Mat> {
    let gram = scores.transpose() * scores;
    let rhs = scores.transpose() * block;
    let sol = match solve_spd(&gram, &rhs, 0.0) {
        Some(s) => s,
        None => {
            let r = gram.nrows() as f64;
            let ridge = (1e-10 * gram.trace() / r).max(f64::MIN_POSITIVE);
            solve_spd(&gram, &rhs, ridge)
                .ok_or_else(|| Error::Degenerate("score Gram matrix is not invertible".into()))?
        }
    };
    Ok(sol.transpose())
}

/// X = TPᵀ + E and Y = BQᵀ + F for a fitted model on (compatible) data.
pub fn loadings_and_residuals(model: &PlsrModel, data: &DataMatrixPair) -> Result<Decomposition> {
    if data.x.ncols() != model.n_features() || data.y.ncols() != model.n_targets() {
        return Err(Error::ShapeMismatch(format!(
            "data is {}x{} / {}x{}, model expects N={} M={}",
            data.x.nrows(),
            data.x.ncols(),
            data.y.nrows(),
            data.y.ncols(),
            model.n_features(),
            model.n_targets()
        )));
    }
    let xc = subtract_row(&data.x, &model.mean_x);
    let yc = subtract_row(&data.y, &model.mean_y);
    let t = &xc * &model.u;
    let b = &yc * &model.v;
    let p = loadings(&xc, &t)?;
    let q = loadings(&yc, &b)?;
    let e = &xc - &t * p.transpose();
    let f = &yc - &b * q.transpose();
    Ok(Decomposition { t, b, p, q, e, f })
}

/// Row-wise argmax of predicted scores; ties go to the lowest index.
pub fn classify(y_hat: &Mat) -> Vec<usize> {
    y_hat
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Class labels when every row of `y` is an exact one-hot indicator.
pub fn one_hot_labels(y: &Mat) -> Option<Vec<usize>> {
    if y.ncols() < 2 {
        return None;
    }
    y.row_iter()
        .map(|row| {
            let ones: Vec<usize> = (0..row.len()).filter(|&j| row[j] == 1.0).collect();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            (ones.len() == 1 && zeros == row.len() - 1).then(|| ones[0])
        })
        .collect()
}
