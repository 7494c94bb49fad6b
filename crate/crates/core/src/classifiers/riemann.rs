//! Affine-invariant geometry on SPD matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{expm_sym, SpdMatrix};

pub const DEFAULT_MEAN_TOL: f64 = 1e-8;
pub const DEFAULT_MEAN_MAX_ITER: usize = 50;

/// `‖log(A^{-1/2} B A^{-1/2})‖_F`.
pub fn riemannian_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(distance_from_whitener(&a.inv_sqrt(), b))
}

/// Distance given a precomputed `A^{-1/2}`.
pub(crate) fn distance_from_whitener(a_inv_sqrt: &SpdMatrix, b: &SpdMatrix) -> f64 {
    let w = a_inv_sqrt.matrix();
    let m = SpdMatrix::new_unchecked(w * b.matrix() * w);
    m.eigen()
        .eigenvalues
        .iter()
        .map(|l| l.ln().powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone)]
pub struct GeometricMean {
    pub mean: SpdMatrix,
    pub iterations: usize,
    /// `‖(1/N) Σ log(G^{-1/2} C_i G^{-1/2})‖_F` at the last checked iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Karcher mean by the unit-step fixed-point iteration
/// `G ← G^{1/2} exp(mean_i log(G^{-1/2} C_i G^{-1/2})) G^{1/2}`, started at
/// the arithmetic mean. Stops once the mean log-map has norm `≤ tol`. On
/// non-convergence the iterate with the smallest residual is returned with
/// `converged = false`.
pub fn geometric_mean(mats: &[SpdMatrix], tol: f64, max_iter: usize) -> Result<GeometricMean> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("geometric mean of an empty list".into()))?;
    let n = first.dim();
    if mats.iter().any(|m| m.dim() != n) {
        return Err(Error::InvalidArgument("matrices differ in dimension".into()));
    }
    let mut sum = DMatrix::zeros(n, n);
    for m in mats {
        sum += m.matrix();
    }
    let mut g = SpdMatrix::new_unchecked(sum / mats.len() as f64);
    let mut best: Option<(f64, SpdMatrix)> = None;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let eig = g.eigen();
        let sq = SpdMatrix::new_unchecked(crate::linalg::spectral_map(&eig, f64::sqrt));
        let isq = SpdMatrix::new_unchecked(crate::linalg::spectral_map(&eig, |l| 1.0 / l.sqrt()));
        let mut t = DMatrix::zeros(n, n);
        for c in mats {
            t += c.congruence(isq.matrix()).log();
        }
        t /= mats.len() as f64;
        residual = t.norm();
        if !residual.is_finite() {
            return Err(Error::NonFinite("geometric mean iteration".into()));
        }
        let next = expm_sym(&t).congruence(sq.matrix());
        if residual <= tol {
            return Ok(GeometricMean {
                mean: next,
                iterations: it,
                residual,
                converged: true,
            });
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, g.clone()));
        }
        g = next;
    }
    let (r, m) = best.unwrap_or((residual, g));
    log::warn!("geometric mean did not converge in {max_iter} iterations (residual {r:.3e})");
    Ok(GeometricMean {
        mean: m,
        iterations: max_iter,
        residual: r,
        converged: false,
    })
}
