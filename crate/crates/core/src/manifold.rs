//! Geometry of the search space Gr(N,R) × Gr(M,R) × ℝ^{R×R}.
//!
//! A point is a triple `(U, V, S)` where `U` and `V` are orthonormal
//! representatives of subspaces and `S` is an unconstrained core factor.
//! Tangent vectors on the Grassmann factors are measured with the scaled
//! metric
//!
//! ```text
//! g((ξ_U, ξ_V, ξ_S), (η_U, η_V, η_S)) = tr(SSᵀ ξ_Uᵀ η_U) + tr(SᵀS ξ_Vᵀ η_V) + tr(ξ_Sᵀ η_S)
//! ```
//!
//! which changes with `S` at every iterate. Projections onto the tangent
//! space (removing the normal part `U B m⁻¹`, `B` symmetric) and onto the
//! horizontal space (removing the vertical part `U Ω`, `Ω` skew) are both
//! orthogonal with respect to this metric, and reduce to the classical
//! Grassmann formulas when the scaling is the identity.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, frob_inner, orthonormality_defect, qf, Mat};

/// Tolerance on ‖UᵀU − I‖_F accepted for a Grassmann representative.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Orthonormal N×R representative of an R-dimensional subspace of ℝᴺ.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    basis: Mat,
}

impl GrassmannPoint {
    pub fn new(basis: Mat) -> Result<Self> {
        let (n, r) = basis.shape();
        if r == 0 || r > n {
            return Err(Error::InvalidBasis(format!(
                "need 1 <= R <= N, got {n}x{r}"
            )));
        }
        if !all_finite(&basis) {
            return Err(Error::InvalidBasis("non-finite entries".into()));
        }
        let defect = orthonormality_defect(&basis);
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::InvalidBasis(format!(
                "columns not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes an arbitrary full-column-rank matrix.
    pub fn from_spanning(a: &Mat) -> Result<Self> {
        Self::new(qf(a)?)
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn into_basis(self) -> Mat {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// The unconstrained R×R core `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreFactor(Mat);

impl CoreFactor {
    pub fn new(s: Mat) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::InvalidCoreFactor(format!(
                "core must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if !all_finite(&s) {
            return Err(Error::InvalidCoreFactor("non-finite entries".into()));
        }
        Ok(Self(s))
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }
}

/// A point `(U, V, S)` of the bi-Grassmann product manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    u: GrassmannPoint,
    v: GrassmannPoint,
    s: CoreFactor,
}

impl ProductPoint {
    pub fn new(u: GrassmannPoint, v: GrassmannPoint, s: CoreFactor) -> Result<Self> {
        let r = u.rank();
        if v.rank() != r || s.matrix().nrows() != r {
            return Err(Error::ShapeMismatch(format!(
                "ranks differ: U has {}, V has {}, S is {}x{}",
                r,
                v.rank(),
                s.matrix().nrows(),
                s.matrix().ncols()
            )));
        }
        Ok(Self { u, v, s })
    }

    /// Builds a point from raw matrices, validating every invariant.
    pub fn from_matrices(u: Mat, v: Mat, s: Mat) -> Result<Self> {
        Self::new(
            GrassmannPoint::new(u)?,
            GrassmannPoint::new(v)?,
            CoreFactor::new(s)?,
        )
    }

    pub fn u(&self) -> &Mat {
        self.u.basis()
    }

    pub fn v(&self) -> &Mat {
        self.v.basis()
    }

    pub fn s(&self) -> &Mat {
        self.s.matrix()
    }

    pub fn u_point(&self) -> &GrassmannPoint {
        &self.u
    }

    pub fn v_point(&self) -> &GrassmannPoint {
        &self.v
    }

    /// (N, M, R)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.u.ambient_dim(), self.v.ambient_dim(), self.u.rank())
    }

    pub fn into_parts(self) -> (Mat, Mat, Mat) {
        (self.u.basis, self.v.basis, self.s.0)
    }
}

/// A tangent vector `(ξ_U, ξ_V, ξ_S)`; horizontal when produced by the
/// projections of this module.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentTriple {
    pub xi_u: Mat,
    pub xi_v: Mat,
    pub xi_s: Mat,
}

impl TangentTriple {
    pub fn zeros(point: &ProductPoint) -> Self {
        let (n, m, r) = point.dims();
        Self {
            xi_u: Mat::zeros(n, r),
            xi_v: Mat::zeros(m, r),
            xi_s: Mat::zeros(r, r),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            xi_u: &self.xi_u * alpha,
            xi_v: &self.xi_v * alpha,
            xi_s: &self.xi_s * alpha,
        }
    }

    /// self + alpha·other
    pub fn axpy(&self, alpha: f64, other: &TangentTriple) -> Self {
        Self {
            xi_u: &self.xi_u + &other.xi_u * alpha,
            xi_v: &self.xi_v + &other.xi_v * alpha,
            xi_s: &self.xi_s + &other.xi_s * alpha,
        }
    }

    /// Plain Frobenius inner product of the stacked blocks.
    pub fn euclidean_inner(&self, other: &TangentTriple) -> f64 {
        frob_inner(&self.xi_u, &other.xi_u)
            + frob_inner(&self.xi_v, &other.xi_v)
            + frob_inner(&self.xi_s, &other.xi_s)
    }

    fn check_shape(&self, point: &ProductPoint) -> Result<()> {
        let (n, m, r) = point.dims();
        if self.xi_u.shape() != (n, r) || self.xi_v.shape() != (m, r) || self.xi_s.shape() != (r, r)
        {
            return Err(Error::ShapeMismatch(format!(
                "tangent blocks {:?}, {:?}, {:?} do not fit point with N={n}, M={m}, R={r}",
                self.xi_u.shape(),
                self.xi_v.shape(),
                self.xi_s.shape()
            )));
        }
        Ok(())
    }
}

/// Partial derivatives of a cost in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanGradient {
    pub g_u: Mat,
    pub g_v: Mat,
    pub g_s: Mat,
}

impl EuclideanGradient {
    fn as_triple(&self) -> TangentTriple {
        TangentTriple {
            xi_u: self.g_u.clone(),
            xi_v: self.g_v.clone(),
            xi_s: self.g_s.clone(),
        }
    }
}

/// Whether the Grassmann blocks are scaled by SSᵀ / SᵀS or by the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    Preconditioned,
    Identity,
}

/// A symmetric positive definite R×R scaling with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    matrix: Mat,
    eigenvectors: Mat,
    eigenvalues: Vec<f64>,
    identity: bool,
}

impl SpdFactor {
    /// Factorizes a symmetric matrix; the caller guarantees positive definiteness.
    pub fn new(matrix: Mat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch("preconditioner must be square".into()));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
            if !(min > 0.0) {
                return Err(Error::SingularPreconditioner(min));
            }
        }
        Ok(Self {
            matrix,
            eigenvectors: eig.eigenvectors,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            identity: false,
        })
    }

    pub fn identity(r: usize) -> Self {
        Self {
            matrix: Mat::identity(r, r),
            eigenvectors: Mat::identity(r, r),
            eigenvalues: vec![1.0; r],
            identity: true,
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Q·f(Qᵀ c Q)·Qᵀ with f applied entry-wise as `f(c̃ᵢⱼ, λᵢ, λⱼ)`.
    fn eigen_map(&self, c: &Mat, f: impl Fn(f64, f64, f64) -> f64) -> Result<Mat> {
        let q = &self.eigenvectors;
        let mut ct = q.transpose() * c * q;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let (li, lj) = (self.eigenvalues[i], self.eigenvalues[j]);
                if !(li + lj >= 1e-300) {
                    return Err(Error::SingularPreconditioner(li + lj));
                }
                ct[(i, j)] = f(ct[(i, j)], li, lj);
            }
        }
        Ok(q * ct * q.transpose())
    }

    /// A·m⁻¹
    pub fn right_solve(&self, a: &Mat) -> Mat {
        if self.identity {
            return a.clone();
        }
        let q = &self.eigenvectors;
        let mut aq = a * q;
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            aq.column_mut(j).scale_mut(1.0 / lambda);
        }
        aq * q.transpose()
    }
}

/// The pair of scalings (SSᵀ, SᵀS) defining the metric at one point.
#[derive(Debug, Clone)]
pub struct MetricState {
    pub m_u: SpdFactor,
    pub m_v: SpdFactor,
    pub mode: MetricMode,
}

/// Builds the metric at `point`: `SSᵀ + δI` and `SᵀS + δI` with
/// `δ = 1e-12·max(1, tr(SSᵀ)/R)`, or the identity pair.
pub fn metric_state(point: &ProductPoint, mode: MetricMode) -> Result<MetricState> {
    let s = point.s();
    if !all_finite(s) {
        return Err(Error::InvalidCoreFactor("non-finite entries".into()));
    }
    let r = s.nrows();
    match mode {
        MetricMode::Identity => Ok(MetricState {
            m_u: SpdFactor::identity(r),
            m_v: SpdFactor::identity(r),
            mode,
        }),
        MetricMode::Preconditioned => {
            let mut m_u = s * s.transpose();
            let mut m_v = s.transpose() * s;
            let delta = 1e-12 * (m_u.trace() / r as f64).max(1.0);
            for i in 0..r {
                m_u[(i, i)] += delta;
                m_v[(i, i)] += delta;
            }
            // Enforce exact symmetry before factorizing.
            let m_u = crate::linalg::sym(&m_u);
            let m_v = crate::linalg::sym(&m_v);
            Ok(MetricState {
                m_u: SpdFactor::new(m_u)?,
                m_v: SpdFactor::new(m_v)?,
                mode,
            })
        }
    }
}

/// The metric g evaluated on two tangent triples at `point`.
pub fn inner(
    point: &ProductPoint,
    metric: &MetricState,
    a: &TangentTriple,
    b: &TangentTriple,
) -> Result<f64> {
    a.check_shape(point)?;
    b.check_shape(point)?;
    if metric.m_u.dim() != point.dims().2 {
        return Err(Error::ShapeMismatch(
            "metric rank differs from point rank".into(),
        ));
    }
    // tr(m ξᵀη) = ⟨ξ m, η⟩_F for symmetric m
    let term_u = frob_inner(&(&a.xi_u * metric.m_u.matrix()), &b.xi_u);
    let term_v = frob_inner(&(&a.xi_v * metric.m_v.matrix()), &b.xi_v);
    Ok(term_u + term_v + frob_inner(&a.xi_s, &b.xi_s))
}

/// Solves `m·B + B·m = c` through the eigendecomposition `m = QΛQᵀ`.
pub fn solve_lyapunov(m: &SpdFactor, c: &Mat) -> Result<Mat> {
    let r = m.dim();
    if c.shape() != (r, r) {
        return Err(Error::ShapeMismatch(format!(
            "Lyapunov right-hand side is {:?}, expected {r}x{r}",
            c.shape()
        )));
    }
    if m.identity {
        return Ok(c * 0.5);
    }
    m.eigen_map(c, |ct, li, lj| ct / (li + lj))
}

fn check_block(u: &GrassmannPoint, a: &Mat, m: &SpdFactor) -> Result<()> {
    if a.shape() != u.basis().shape() || m.dim() != u.rank() {
        return Err(Error::ShapeMismatch(format!(
            "block {:?} / scaling {} do not fit basis {:?}",
            a.shape(),
            m.dim(),
            u.basis().shape()
        )));
    }
    Ok(())
}

/// Metric-orthogonal projection of an ambient N×R matrix onto the tangent
/// space of the Stiefel representative: `a − U B m⁻¹` with
/// `mB + Bm = m(Uᵀa + aᵀU)m`.
pub fn project_to_tangent(u: &GrassmannPoint, a: &Mat, m: &SpdFactor) -> Result<Mat> {
    check_block(u, a, m)?;
    let basis = u.basis();
    let uta = basis.transpose() * a;
    let sym2 = &uta + uta.transpose();
    // B m⁻¹ is formed directly in the eigenbasis: Q (λᵢ c̃ᵢⱼ / (λᵢ + λⱼ)) Qᵀ.
    // Going through B and then m⁻¹ loses accuracy when m is ill-conditioned.
    let x = m.eigen_map(&sym2, |ct, li, lj| ct * li / (li + lj))?;
    Ok(a - basis * x)
}

/// Removes the vertical component `UΩ` from a tangent vector, where the skew
/// `Ω` solves `mΩ + Ωm = Gᵀm − mG` with `G = ξᵀU`.
pub fn project_to_horizontal(u: &GrassmannPoint, xi: &Mat, m: &SpdFactor) -> Result<Mat> {
    check_block(u, xi, m)?;
    let basis = u.basis();
    let g = xi.transpose() * basis;
    let omega = if m.identity {
        crate::linalg::skew(&(g.transpose() - &g)) * 0.5
    } else {
        // In the eigenbasis the right-hand side is g̃ⱼᵢλⱼ − λᵢg̃ᵢⱼ.
        let q = &m.eigenvectors;
        let gt = q.transpose() * &g * q;
        let r = m.dim();
        let mut ot = Mat::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                let (li, lj) = (m.eigenvalues[i], m.eigenvalues[j]);
                let denom = li + lj;
                if !(denom >= 1e-300) {
                    return Err(Error::SingularPreconditioner(denom));
                }
                ot[(i, j)] = (gt[(j, i)] * lj - li * gt[(i, j)]) / denom;
            }
        }
        crate::linalg::skew(&(q * ot * q.transpose()))
    };
    Ok(xi - basis * omega)
}

/// Π = Pʰ∘Pᵛ under scaling `m`.
fn project_block(u: &GrassmannPoint, a: &Mat, m: &SpdFactor) -> Result<Mat> {
    project_to_horizontal(u, &project_to_tangent(u, a, m)?, m)
}

/// Converts a Euclidean gradient into the Riemannian gradient of the scaled
/// metric: each Grassmann block is scaled by m⁻¹ and then projected; the core
/// block is left unchanged.
///
/// The result is the unique horizontal triple with
/// `g(rgrad, η) = ⟨egrad, η⟩` for every horizontal `η`.
pub fn egrad_to_rgrad(
    point: &ProductPoint,
    metric: &MetricState,
    eg: &EuclideanGradient,
) -> Result<TangentTriple> {
    eg.as_triple().check_shape(point)?;
    let xi_u = project_block(
        point.u_point(),
        &metric.m_u.right_solve(&eg.g_u),
        &metric.m_u,
    )?;
    let xi_v = project_block(
        point.v_point(),
        &metric.m_v.right_solve(&eg.g_v),
        &metric.m_v,
    )?;
    Ok(TangentTriple {
        xi_u,
        xi_v,
        xi_s: eg.g_s.clone(),
    })
}

/// Projects an arbitrary triple onto the horizontal space at `point`.
pub fn project_triple(
    point: &ProductPoint,
    metric: &MetricState,
    xi: &TangentTriple,
) -> Result<TangentTriple> {
    xi.check_shape(point)?;
    Ok(TangentTriple {
        xi_u: project_block(point.u_point(), &xi.xi_u, &metric.m_u)?,
        xi_v: project_block(point.v_point(), &xi.xi_v, &metric.m_v)?,
        xi_s: xi.xi_s.clone(),
    })
}

/// QR retraction: `U' = qf(U + tξ_U)`, `V' = qf(V + tξ_V)`, `S' = S + tξ_S`.
pub fn retract(point: &ProductPoint, xi: &TangentTriple, t: f64) -> Result<ProductPoint> {
    xi.check_shape(point)?;
    if t == 0.0 {
        return Ok(point.clone());
    }
    let u = GrassmannPoint::new(qf(&(point.u() + &xi.xi_u * t))?)?;
    let v = GrassmannPoint::new(qf(&(point.v() + &xi.xi_v * t))?)?;
    let s = point.s() + &xi.xi_s * t;
    if !all_finite(&s) {
        return Err(Error::RetractionBreakdown);
    }
    ProductPoint::new(u, v, CoreFactor(s))
}

/// Projection-based vector transport into the horizontal space at `to`,
/// measured with the metric of the destination.
pub fn transport(
    _from: &ProductPoint,
    to: &ProductPoint,
    metric_at_to: &MetricState,
    xi: &TangentTriple,
) -> Result<TangentTriple> {
    project_triple(to, metric_at_to, xi)
}

/// ‖Uᵀξ + ξᵀU‖_F, zero for tangent vectors.
pub fn tangency_residual(u: &GrassmannPoint, xi: &Mat) -> f64 {
    let utx = u.basis().transpose() * xi;
    (&utx + utx.transpose()).norm()
}

/// Norm of the vertical component of `xi` under scaling `m`.
pub fn vertical_residual(u: &GrassmannPoint, xi: &Mat, m: &SpdFactor) -> Result<f64> {
    let h = project_to_horizontal(u, xi, m)?;
    Ok((xi - h).norm())
}
