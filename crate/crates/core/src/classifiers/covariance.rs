use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;

/// Shrunk sample covariance of a channels x time window:
/// `(1-λ)·XXᵀ/(T-1) + λ·(tr/C)·I` after removing each channel's mean.
pub fn estimate_covariance(window: &DMatrix<f64>, shrinkage: f64) -> Result<SpdMatrix> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidArgument(format!("shrinkage {shrinkage} outside [0, 1]")));
    }
    let (c, t) = window.shape();
    if t < 2 || c == 0 {
        return Err(Error::InvalidArgument(format!("window of {c}x{t} is too small")));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance window".into()));
    }
    let mut x = window.clone();
    for mut row in x.row_iter_mut() {
        let m = row.mean();
        row.add_scalar_mut(-m);
    }
    let s = (&x * x.transpose()) / (t - 1) as f64;
    let mu = s.trace() / c as f64;
    let out = s * (1.0 - shrinkage) + DMatrix::identity(c, c) * (shrinkage * mu);
    if shrinkage > 0.0 {
        if !(mu > 0.0) {
            return Err(Error::ZeroVariance);
        }
        // smallest eigenvalue is at least shrinkage * mu
        Ok(SpdMatrix::new_unchecked(out))
    } else {
        SpdMatrix::new(out)
    }
}
