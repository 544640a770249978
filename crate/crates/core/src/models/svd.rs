use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Leading singular triplets, singular values in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    pub u: Mat,
    pub singular_values: DVector<f64>,
    pub v: Mat,
}

/// Top-`rank` singular triplets of `z`: the closed-form minimizer of
/// ½‖USVᵀ − Z‖² (Eckart–Young), with optimal value ½Σ_{r>rank} σ_r².
pub fn truncated_svd(z: &Mat, rank: usize) -> Result<TruncatedSvd> {
    let max = z.nrows().min(z.ncols());
    if rank == 0 || rank > max {
        return Err(Error::InvalidRank { rank, max });
    }
    let svd = z.clone().svd(true, true);
    let (Some(u_full), Some(vt_full)) = (svd.u, svd.v_t) else {
        return Err(Error::Degenerate(
            "SVD did not return singular vectors".into(),
        ));
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let keep = &order[..rank];
    Ok(TruncatedSvd {
        u: u_full.select_columns(keep),
        singular_values: DVector::from_iterator(rank, keep.iter().map(|&i| svd.singular_values[i])),
        v: vt_full.select_rows(keep).transpose(),
    })
}

/// All singular values of `z`, descending.
pub fn singular_values(z: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = z.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// ½Σ_{r>rank} σ_r², the optimal value of the rank-`rank` decomposition cost.
pub fn eckart_young_optimum(z: &Mat, rank: usize) -> f64 {
    0.5 * singular_values(z)
        .iter()
        .skip(rank)
        .map(|s| s * s)
        .sum::<f64>()
}
