//! Small dense helpers shared by the geometry and the estimators.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// (A + Aᵀ)/2
pub fn sym(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

/// (A − Aᵀ)/2
pub fn skew(a: &Mat) -> Mat {
    (a - a.transpose()) * 0.5
}

/// Frobenius inner product tr(AᵀB).
pub fn frob_inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn all_finite(a: &Mat) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Q factor of the thin QR decomposition with the diagonal of R made positive.
///
/// Fails when a diagonal entry of R is negligible relative to the largest one,
/// i.e. the columns of `a` are numerically dependent.
pub fn qf(a: &Mat) -> Result<Mat> {
    let (n, r) = a.shape();
    if r == 0 || r > n {
        return Err(Error::ShapeMismatch(format!(
            "thin QR needs 1 <= columns <= rows, got {n}x{r}"
        )));
    }
    if !all_finite(a) {
        return Err(Error::RetractionBreakdown);
    }
    let qr = a.clone().qr();
    let rf = qr.r();
    let mut q = qr.q();
    let scale = rf.diagonal().amax();
    for j in 0..r {
        let d = rf[(j, j)];
        if !(d.abs() > 1e-12 * scale) {
            return Err(Error::RetractionBreakdown);
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random N×R matrix with orthonormal columns (Gaussian then QR).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<Mat> {
    qf(&gaussian(rng, rows, cols))
}

/// ‖AᵀA − I‖_F
pub fn orthonormality_defect(a: &Mat) -> f64 {
    let mut g = a.transpose() * a;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

/// Solves (A + ridge·I) X = B for symmetric positive semidefinite A.
pub fn solve_spd(a: &Mat, b: &Mat, ridge: f64) -> Option<Mat> {
    let mut a = a.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += ridge;
    }
    a.cholesky().map(|c| c.solve(b))
}

/// Row-major flattening, the layout used by every file format in this crate.
pub fn to_row_major(a: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.push(a[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Option<Mat> {
    (data.len() == rows * cols).then(|| Mat::from_row_slice(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qf_has_positive_r_diagonal_and_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian(&mut rng, 7, 3);
        let q = qf(&a).unwrap();
        assert!(orthonormality_defect(&q) < 1e-13);
        let r = q.transpose() * &a;
        for j in 0..3 {
            assert!(r[(j, j)] > 0.0);
        }
        assert!((&q * r - a).norm() < 1e-12);
    }

    #[test]
    fn qf_rejects_dependent_columns() {
        let a = Mat::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(qf(&a), Err(Error::RetractionBreakdown)));
    }

    #[test]
    fn row_major_round_trip() {
        let a = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(to_row_major(&a), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(from_row_major(2, 3, &to_row_major(&a)).unwrap(), a);
    }
}
