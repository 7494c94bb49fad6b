//! Two-class decoders behind one fit/predict contract.
//!
//! All three consume channels x time windows in µV and predict one of the
//! two labels seen at fit time. Ties resolve toward the first class in label
//! order and are flagged on the prediction.

mod cnn;
mod covariance;
mod csp;
mod lda;
pub mod persist;
mod riemann;
mod rmdm;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use cnn::{
    cnn_fit, cnn_fit_tracked, cnn_predict, standardize_window, CnnConfig, CnnModel, CnnParams,
    CnnPrediction, CnnShape, PARAM_NAMES,
};
pub use covariance::estimate_covariance;
pub use csp::{csp_features, csp_fit, CspFilters};
pub use lda::{lda_fit, lda_predict, LdaModel, LdaPrediction, LDA_RIDGE};
pub use riemann::{geometric_mean, riemannian_distance, GeometricMean, DEFAULT_MEAN_MAX_ITER, DEFAULT_MEAN_TOL};
pub use rmdm::{rmdm_fit, rmdm_fit_covariances, rmdm_predict, rmdm_predict_covariance, RmdmModel, RmdmPrediction};

use crate::error::{Error, Result};
use crate::model::ClassLabel;
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    CspLda,
    Rmdm,
    Cnn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::CspLda, ClassifierKind::Rmdm, ClassifierKind::Cnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::CspLda => "csp-lda",
            ClassifierKind::Rmdm => "rmdm",
            ClassifierKind::Cnn => "cnn",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ClassifierKind::CspLda => 0,
            ClassifierKind::Rmdm => 1,
            ClassifierKind::Cnn => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown classifier {s:?}; valid: csp-lda, rmdm, cnn"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Covariance shrinkage toward the scaled identity (CSP and RMDM).
    pub shrinkage: f64,
    pub csp_pairs: usize,
    pub cnn: CnnConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            shrinkage: 0.01,
            csp_pairs: 3,
            cnn: CnnConfig::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.shrinkage) || self.csp_pairs == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid classifier configuration: shrinkage {}, csp_pairs {}",
                self.shrinkage, self.csp_pairs
            )));
        }
        self.cnn.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspLdaModel {
    pub filters: CspFilters,
    pub lda: LdaModel,
    pub shrinkage: f64,
}

pub fn csp_lda_fit(windows: &[DMatrix<f64>], labels: &[ClassLabel], shrinkage: f64, k_pairs: usize) -> Result<CspLdaModel> {
    if windows.len() != labels.len() {
        return Err(Error::InvalidArgument("windows and labels differ in length".into()));
    }
    let classes = lda::two_classes(labels)?;
    let covs = windows
        .iter()
        .map(|w| estimate_covariance(w, shrinkage))
        .collect::<Result<Vec<_>>>()?;
    let pick = |class: ClassLabel| {
        covs.iter()
            .zip(labels)
            .filter(|(_, l)| **l == class)
            .map(|(c, _)| c.clone())
            .collect::<Vec<_>>()
    };
    let filters = csp_fit(&pick(classes[0]), &pick(classes[1]), k_pairs)?;
    let features = windows
        .iter()
        .map(|w| csp_features(w, &filters))
        .collect::<Result<Vec<_>>>()?;
    let lda = lda_fit(&features, labels)?;
    Ok(CspLdaModel { filters, lda, shrinkage })
}

pub fn csp_lda_predict(model: &CspLdaModel, window: &DMatrix<f64>) -> Result<LdaPrediction> {
    lda_predict(&model.lda, &csp_features(window, &model.filters)?)
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    CspLda(CspLdaModel),
    Rmdm(RmdmModel),
    Cnn(Box<CnnModel>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    /// Decision fell exactly on the boundary and went to the first class.
    pub tie: bool,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::CspLda(_) => ClassifierKind::CspLda,
            TrainedModel::Rmdm(_) => ClassifierKind::Rmdm,
            TrainedModel::Cnn(_) => ClassifierKind::Cnn,
        }
    }

    pub fn classes(&self) -> [ClassLabel; 2] {
        match self {
            TrainedModel::CspLda(m) => m.lda.classes,
            TrainedModel::Rmdm(m) => m.classes,
            TrainedModel::Cnn(m) => m.classes,
        }
    }

    /// False only for an RMDM model whose class mean hit the iteration cap.
    pub fn converged(&self) -> bool {
        match self {
            TrainedModel::Rmdm(m) => m.converged,
            _ => true,
        }
    }

    pub fn predict(&self, window: &DMatrix<f64>) -> Result<Prediction> {
        match self {
            TrainedModel::CspLda(m) => {
                let p = csp_lda_predict(m, window)?;
                Ok(Prediction {
                    label: p.label,
                    tie: p.score == 0.0,
                })
            }
            TrainedModel::Rmdm(m) => {
                let p = rmdm_predict(m, window)?;
                Ok(Prediction { label: p.label, tie: p.tie })
            }
            TrainedModel::Cnn(m) => {
                let p = cnn_predict(m, window)?;
                Ok(Prediction { label: p.label, tie: p.tie })
            }
        }
    }
}

/// Fits one classifier on equally shaped windows. Deterministic given the
/// inputs and `seed` (only the CNN consumes randomness).
pub fn fit(
    kind: ClassifierKind,
    windows: &[DMatrix<f64>],
    labels: &[ClassLabel],
    config: &ClassifierConfig,
    sample_rate: u32,
    seed: RngSeed,
) -> Result<TrainedModel> {
    config.validate()?;
    Ok(match kind {
        ClassifierKind::CspLda => TrainedModel::CspLda(csp_lda_fit(windows, labels, config.shrinkage, config.csp_pairs)?),
        ClassifierKind::Rmdm => TrainedModel::Rmdm(rmdm_fit(windows, labels, config.shrinkage)?),
        ClassifierKind::Cnn => TrainedModel::Cnn(Box::new(cnn_fit(windows, labels, &config.cnn, sample_rate, seed)?)),
    })
}
