//! Dense linear algebra used by the Galerkin solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition numbers above this trigger a warning.
pub const CONDITION_WARNING: f64 = 1e10;

/// Spectral factorization `B = Q diag(lambda) Q^T` of a symmetric,
/// possibly indefinite matrix.
#[derive(Debug, Clone)]
pub struct SymmetricSolver {
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    /// Symmetric diagonal equilibration `B = S B' S`.
    scale: DVector<f64>,
    condition: f64,
}

impl SymmetricSolver {
    pub fn new(b: &DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { condition: f64::INFINITY });
        }
        let scale = DVector::from_fn(b.nrows(), |i, _| {
            let d = b[(i, i)].abs().sqrt();
            if d > 0.0 { d } else { 1.0 }
        });
        let eigen = SymmetricEigen::new(DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
            b[(i, j)] / (scale[i] * scale[j])
        }));
        let abs: Vec<f64> = eigen.eigenvalues.iter().map(|l| l.abs()).collect();
        let max = abs.iter().cloned().fold(0.0, f64::max);
        let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(min > max * 1e-20) {
            return Err(Error::SingularSystem { condition });
        }
        if condition > CONDITION_WARNING {
            log::warn!("ill-conditioned Galerkin matrix: condition {condition:.3e}");
        }
        Ok(Self { eigen, scale, condition })
    }

    /// 2-norm condition number of the equilibrated matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Eigenvalues of the equilibrated matrix.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigen.eigenvalues
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let q = &self.eigen.eigenvectors;
        let mut y = q.tr_mul(&rhs.component_div(&self.scale));
        for (yi, l) in y.iter_mut().zip(self.eigen.eigenvalues.iter()) {
            *yi /= l;
        }
        (q * y).component_div(&self.scale)
    }
}

/// Orthonormal basis for the column space of `a`, dropping directions with
/// singular values below `rel_tol` times the largest.
pub fn orthonormal_columns(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rel_tol * smax && **s > 0.0)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(a.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Principal angles (radians, ascending) between the column spans of `a`
/// and `b`, both sampled as weighted node vectors.
///
/// Cosines come from the singular values of `Qa^T Qb`, sines from the
/// residual `Qa - Qb Qb^T Qa`; `atan2` keeps small angles accurate.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let qa = orthonormal_columns(a, 1e-12);
    let qb = orthonormal_columns(b, 1e-12);
    let (qa, qb) = if qa.ncols() <= qb.ncols() { (qa, qb) } else { (qb, qa) };
    let p = qa.ncols();
    if p == 0 {
        return Vec::new();
    }
    let cross = qa.tr_mul(&qb);
    let mut cosines: Vec<f64> = cross.singular_values().iter().copied().collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    cosines.truncate(p);
    let residual = &qa - &qb * cross.transpose();
    let mut sines: Vec<f64> = residual.singular_values().iter().copied().collect();
    sines.sort_by(f64::total_cmp);
    sines.truncate(p);
    cosines
        .iter()
        .zip(&sines)
        .map(|(c, s)| s.min(1.0).atan2(c.min(1.0)))
        .collect()
}
