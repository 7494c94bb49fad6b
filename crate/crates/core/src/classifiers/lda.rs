//! Two-class Fisher linear discriminant.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClassLabel;

pub const LDA_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// `classes[1]` is predicted for positive scores.
    pub classes: [ClassLabel; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaPrediction {
    pub label: ClassLabel,
    pub score: f64,
}

/// Distinct labels in label order.
pub(crate) fn two_classes(labels: &[ClassLabel]) -> Result<[ClassLabel; 2]> {
    let mut seen: Vec<ClassLabel> = labels.to_vec();
    seen.sort();
    seen.dedup();
    match seen.as_slice() {
        [] => Err(Error::InvalidArgument("no labels".into())),
        [one] => Err(Error::SingleClass(*one)),
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::InvalidArgument(format!("more than two classes: {seen:?}"))),
    }
}

/// `w = (S_w + ridge·I)⁻¹ (μ₁ - μ₀)`, boundary at the midpoint of the
/// projected class means.
pub fn lda_fit(features: &[Vec<f64>], labels: &[ClassLabel]) -> Result<LdaModel> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::InvalidArgument("features and labels differ in length".into()));
    }
    let classes = two_classes(labels)?;
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::InvalidArgument("ragged feature vectors".into()));
    }
    let mut means = [DVector::zeros(d), DVector::zeros(d)];
    let mut counts = [0usize; 2];
    for (f, l) in features.iter().zip(labels) {
        let k = usize::from(*l == classes[1]);
        means[k] += DVector::from_column_slice(f);
        counts[k] += 1;
    }
    for k in 0..2 {
        means[k] /= counts[k] as f64;
    }
    let mut sw = DMatrix::zeros(d, d);
    for (f, l) in features.iter().zip(labels) {
        let k = usize::from(*l == classes[1]);
        let r = DVector::from_column_slice(f) - &means[k];
        sw += &r * r.transpose();
    }
    let dof = (features.len() as f64 - 2.0).max(1.0);
    sw /= dof;
    sw += DMatrix::identity(d, d) * LDA_RIDGE;
    let diff = &means[1] - &means[0];
    let w = sw
        .cholesky()
        .ok_or_else(|| Error::NotSpd("within-class scatter".into()))?
        .solve(&diff);
    let bias = -w.dot(&(&means[0] + &means[1])) / 2.0;
    Ok(LdaModel {
        weights: w.iter().copied().collect(),
        bias,
        classes,
    })
}

pub fn lda_predict(model: &LdaModel, features: &[f64]) -> Result<LdaPrediction> {
    if features.len() != model.weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} features, model expects {}",
            features.len(),
            model.weights.len()
        )));
    }
    let score = model.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + model.bias;
    let label = if score > 0.0 { model.classes[1] } else { model.classes[0] };
    Ok(LdaPrediction { label, score })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
        let mut rng = RngSeed(seed).rng();
        let mut f = Vec::new();
        let mut l = Vec::new();
        for i in 0..2 * n {
            let k = i % 2;
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            f.push(vec![x + sep * k as f64, 0.5 * y - sep * k as f64, 3.0]);
            l.push(if k == 0 { ClassLabel::Emergency } else { ClassLabel::NoBraking });
        }
        (f, l)
    }

    #[test]
    fn separable_blobs() {
        let (f, l) = blobs(100, 12.0, 1);
        let m = lda_fit(&f, &l).unwrap();
        for (x, y) in f.iter().zip(&l) {
            assert_eq!(lda_predict(&m, x).unwrap().label, *y);
        }
    }

    #[test]
    fn identical_means_tie_to_first_class() {
        let f = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![1.0, 2.0], vec![3.0, 4.0]];
        let l = vec![ClassLabel::Normal, ClassLabel::Normal, ClassLabel::NoBraking, ClassLabel::NoBraking];
        let m = lda_fit(&f, &l).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-12));
        assert_eq!(lda_predict(&m, &[10.0, -3.0]).unwrap().label, ClassLabel::Normal);
    }

    #[test]
    fn affine_axis_rescaling_keeps_labels() {
        let (f, l) = blobs(60, 1.0, 2);
        let (test, _) = blobs(40, 1.0, 3);
        let m = lda_fit(&f, &l).unwrap();
        let tf = |v: &Vec<f64>| vec![v[0], 7.5 * v[1] - 2.0, v[2]];
        let m2 = lda_fit(&f.iter().map(tf).collect::<Vec<_>>(), &l).unwrap();
        for x in &test {
            let a = lda_predict(&m, x).unwrap();
            let b = lda_predict(&m2, &tf(x)).unwrap();
            assert_eq!(a.label, b.label, "scores {} vs {}", a.score, b.score);
        }
    }

    #[test]
    fn single_class_is_an_error() {
        let f = vec![vec![1.0], vec![2.0]];
        let l = vec![ClassLabel::Normal; 2];
        assert!(matches!(lda_fit(&f, &l), Err(Error::SingleClass(ClassLabel::Normal))));
    }
}
