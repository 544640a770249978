//! SIMPLS (de Jong, 1993): components are extracted one at a time from the
//! dominant singular pair of the deflated cross-product matrix.

use super::{center, svd::truncated_svd, DataMatrixPair, PlsrModel, Variant};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::optimizer::Trace;

pub fn fit_simpls(data: &DataMatrixPair, rank: usize) -> Result<PlsrModel> {
    let n = data.x().ncols();
    let m = data.y().ncols();
    let i = data.n_samples();
    let max = n.min(i - 1);
    if rank == 0 || rank > max {
        return Err(Error::InvalidRank { rank, max });
    }
    let c = center(data, true)?;
    let x_scale = c.xc.norm();
    if !(x_scale > 0.0) {
        return Err(Error::Degenerate("X has zero variance".into()));
    }
    if !(c.yc.norm() > 0.0) {
        return Err(Error::Degenerate("Y has zero variance".into()));
    }

    let mut s = c.xc.transpose() * &c.yc;
    let mut weights = Mat::zeros(n, rank);
    let mut scores = Mat::zeros(i, rank);
    let mut y_loadings = Mat::zeros(m, rank);
    // orthonormal basis of the X loadings, used for deflation
    let mut basis = Mat::zeros(n, rank);

    for a in 0..rank {
        let dominant = truncated_svd(&s, 1)?;
        if !(dominant.singular_values[0] > 1e-12 * x_scale * c.yc.norm()) {
            return Err(Error::Degenerate(format!(
                "cross-product exhausted after {a} components"
            )));
        }
        let q = dominant.v.column(0).into_owned();
        let mut r = &s * q;
        let mut t = &c.xc * &r;
        let t_norm = t.norm();
        if !(t_norm > 1e-12 * x_scale) {
            return Err(Error::Degenerate(format!("score {a} vanished")));
        }
        t /= t_norm;
        r /= t_norm;
        let p = c.xc.transpose() * &t;
        let q_load = c.yc.transpose() * &t;

        let mut v = p.clone();
        if a > 0 {
            let prev = basis.columns(0, a);
            v -= prev * (prev.transpose() * &v);
            // second pass keeps the basis orthonormal to working precision
            v -= prev * (prev.transpose() * &v);
        }
        let v_norm = v.norm();
        if !(v_norm > 0.0) {
            return Err(Error::Degenerate(format!("loading {a} is dependent")));
        }
        v /= v_norm;
        s -= &v * (v.transpose() * &s);

        weights.set_column(a, &r);
        scores.set_column(a, &t);
        y_loadings.set_column(a, &q_load);
        basis.set_column(a, &v);
    }

    let coeffs = &weights * y_loadings.transpose();
    Ok(PlsrModel {
        variant: Variant::Simpls,
        u: weights,
        v: y_loadings,
        s: Mat::identity(rank, rank),
        coeffs,
        mean_x: c.mean_x,
        mean_y: c.mean_y,
        trace: Trace::empty(),
    })
}
