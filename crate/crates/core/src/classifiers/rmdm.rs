//! Riemannian minimum distance to mean.

use nalgebra::DMatrix;

use super::covariance::estimate_covariance;
use super::lda::two_classes;
use super::riemann::{distance_from_whitener, geometric_mean, DEFAULT_MEAN_MAX_ITER, DEFAULT_MEAN_TOL};
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::model::ClassLabel;

#[derive(Debug, Clone)]
pub struct RmdmModel {
    pub classes: [ClassLabel; 2],
    pub class_means: [SpdMatrix; 2],
    pub shrinkage: f64,
    /// False if either class mean hit the iteration cap.
    pub converged: bool,
    whiteners: [SpdMatrix; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmdmPrediction {
    pub label: ClassLabel,
    pub distances: [f64; 2],
    pub tie: bool,
}

impl RmdmModel {
    /// Rebuilds a model from stored class means.
    pub fn from_means(classes: [ClassLabel; 2], class_means: [SpdMatrix; 2], shrinkage: f64, converged: bool) -> Self {
        let whiteners = [class_means[0].inv_sqrt(), class_means[1].inv_sqrt()];
        RmdmModel {
            classes,
            class_means,
            shrinkage,
            converged,
            whiteners,
        }
    }
}

/// Fits from precomputed covariances.
pub fn rmdm_fit_covariances(covs: &[SpdMatrix], labels: &[ClassLabel], shrinkage: f64) -> Result<RmdmModel> {
    if covs.len() != labels.len() {
        return Err(Error::InvalidArgument("covariances and labels differ in length".into()));
    }
    let classes = two_classes(labels)?;
    let mut means = Vec::with_capacity(2);
    let mut converged = true;
    for class in classes {
        let members: Vec<SpdMatrix> = covs
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == class)
            .map(|(c, _)| c.clone())
            .collect();
        if members.len() < 2 {
            return Err(Error::TooFewEpochs {
                class,
                count: members.len(),
                required: 2,
            });
        }
        let g = geometric_mean(&members, DEFAULT_MEAN_TOL, DEFAULT_MEAN_MAX_ITER)?;
        converged &= g.converged;
        means.push(g.mean);
    }
    let b = means.pop().expect("two means");
    let a = means.pop().expect("two means");
    Ok(RmdmModel::from_means(classes, [a, b], shrinkage, converged))
}

pub fn rmdm_fit(windows: &[DMatrix<f64>], labels: &[ClassLabel], shrinkage: f64) -> Result<RmdmModel> {
    let covs = windows
        .iter()
        .map(|w| estimate_covariance(w, shrinkage))
        .collect::<Result<Vec<_>>>()?;
    rmdm_fit_covariances(&covs, labels, shrinkage)
}

pub fn rmdm_predict_covariance(model: &RmdmModel, cov: &SpdMatrix) -> Result<RmdmPrediction> {
    if cov.dim() != model.class_means[0].dim() {
        return Err(Error::InvalidArgument(format!(
            "covariance is {}x{}, model expects {}",
            cov.dim(),
            cov.dim(),
            model.class_means[0].dim()
        )));
    }
    let d = [
        distance_from_whitener(&model.whiteners[0], cov),
        distance_from_whitener(&model.whiteners[1], cov),
    ];
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Riemannian distance".into()));
    }
    let tie = d[0] == d[1];
    if tie {
        log::debug!("RMDM tie at distance {}; choosing {:?}", d[0], model.classes[0]);
    }
    let label = if d[1] < d[0] { model.classes[1] } else { model.classes[0] };
    Ok(RmdmPrediction { label, distances: d, tie })
}

pub fn rmdm_predict(model: &RmdmModel, window: &DMatrix<f64>) -> Result<RmdmPrediction> {
    rmdm_predict_covariance(model, &estimate_covariance(window, model.shrinkage)?)
}
