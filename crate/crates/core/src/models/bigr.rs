//! PLSR through the three-factor decomposition Z ≈ U S Vᵀ on the
//! bi-Grassmann manifold.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{center, score_regression, svd::truncated_svd, DataMatrixPair, PlsrModel, Variant};
use crate::error::{Error, Result};
use crate::linalg::{random_orthonormal, Mat};
use crate::manifold::{EuclideanGradient, MetricMode, ProductPoint};
use crate::optimizer::{minimize, Objective, OptimConfig, Problem};

fn check_dims(point: &ProductPoint, z: &Mat) -> Result<()> {
    let (n, m, _) = point.dims();
    if z.shape() != (n, m) {
        return Err(Error::ShapeMismatch(format!(
            "Z is {:?}, point expects {n}x{m}",
            z.shape()
        )));
    }
    Ok(())
}

/// ½‖U S Vᵀ − Z‖_F²
pub fn cost(point: &ProductPoint, z: &Mat) -> Result<f64> {
    check_dims(point, z)?;
    Ok(residual(point, z).norm_squared() * 0.5)
}

fn residual(point: &ProductPoint, z: &Mat) -> Mat {
    point.u() * point.s() * point.v().transpose() - z
}

/// Partial derivatives of [`cost`] with residual W = U S Vᵀ − Z:
/// `W V Sᵀ`, `Wᵀ U S`, `Uᵀ W V`.
pub fn egrad(point: &ProductPoint, z: &Mat) -> Result<EuclideanGradient> {
    check_dims(point, z)?;
    let w = residual(point, z);
    Ok(EuclideanGradient {
        g_u: &w * point.v() * point.s().transpose(),
        g_v: w.transpose() * point.u() * point.s(),
        g_s: point.u().transpose() * &w * point.v(),
    })
}

/// The decomposition cost for a fixed cross-product matrix.
#[derive(Debug, Clone)]
pub struct PlsrCost {
    pub z: Mat,
}

impl Objective for PlsrCost {
    fn cost(&self, point: &ProductPoint) -> f64 {
        cost(point, &self.z).unwrap_or(f64::NAN)
    }

    fn egrad(&self, point: &ProductPoint) -> EuclideanGradient {
        egrad(point, &self.z).expect("point dimensions checked by the optimizer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigrOptions {
    pub rank: usize,
    pub mode: MetricMode,
    /// Column-center X and Y before forming Z.
    pub center: bool,
    /// Start from the truncated SVD of Z instead of a random point.
    pub svd_warm_start: bool,
    pub config: OptimConfig,
}

impl BigrOptions {
    pub fn new(rank: usize, mode: MetricMode, config: OptimConfig) -> Self {
        Self {
            rank,
            mode,
            center: true,
            svd_warm_start: false,
            config,
        }
    }
}

pub fn fit_plsr_bigr(
    data: &DataMatrixPair,
    rank: usize,
    config: &OptimConfig,
    mode: MetricMode,
) -> Result<PlsrModel> {
    fit_plsr_bigr_with(data, &BigrOptions::new(rank, mode, config.clone()))
}

pub fn fit_plsr_bigr_with(data: &DataMatrixPair, opts: &BigrOptions) -> Result<PlsrModel> {
    let n = data.x().ncols();
    let m = data.y().ncols();
    let max = n.min(m);
    if opts.rank == 0 || opts.rank > max {
        return Err(Error::InvalidRank {
            rank: opts.rank,
            max,
        });
    }
    let centered = center(data, opts.center)?;
    let z = centered.xc.transpose() * &centered.yc;

    let (u0, v0) = if opts.svd_warm_start {
        let svd = truncated_svd(&z, opts.rank)?;
        (svd.u, svd.v)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.config.seed);
        let u = random_orthonormal(&mut rng, n, opts.rank)?;
        let v = random_orthonormal(&mut rng, m, opts.rank)?;
        (u, v)
    };
    let s0 = u0.transpose() * &z * &v0;
    let init = ProductPoint::from_matrices(u0, v0, s0)?;

    let objective = PlsrCost { z };
    let problem = Problem::new(&objective, (n, m, opts.rank), opts.mode);
    let (point, trace) = minimize(&problem, &init, &opts.config)?;
    let (u, v, s) = point.into_parts();

    let scores = &centered.xc * &u;
    let g = score_regression(&scores, &centered.yc);
    let coeffs = &u * g;

    let variant = match opts.mode {
        MetricMode::Preconditioned => Variant::BigrPreconditioned,
        MetricMode::Identity => Variant::BigrIdentity,
    };
    Ok(PlsrModel {
        variant,
        u,
        v,
        s,
        coeffs,
        mean_x: centered.mean_x,
        mean_y: centered.mean_y,
        trace,
    })
}
