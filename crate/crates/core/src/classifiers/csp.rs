//! Common spatial patterns from two class covariances.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdMatrix};

/// Ridge added (relative to the mean eigenvalue) when the composite
/// covariance is numerically singular.
const SINGULAR_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CspFilters {
    /// One spatial filter per row, `m x C`.
    pub filters: DMatrix<f64>,
    /// Generalized eigenvalue of each filter, same order as the rows.
    pub eigenvalues: Vec<f64>,
}

fn average(mats: &[SpdMatrix]) -> Result<DMatrix<f64>> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty covariance list".into()))?;
    let mut s = DMatrix::zeros(first.dim(), first.dim());
    for m in mats {
        if m.dim() != first.dim() {
            return Err(Error::InvalidArgument("covariances differ in dimension".into()));
        }
        s += m.matrix();
    }
    Ok(s / mats.len() as f64)
}

/// Solves `Σa v = λ (Σa + Σb) v` on the class-averaged covariances and keeps
/// `k_pairs` eigenvectors from each end of the spectrum, ordered by
/// `|λ - 0.5|` descending. Rows satisfy `W(Σa+Σb)Wᵀ = I`, `WΣaWᵀ = diag(λ)`.
pub fn csp_fit(class_a: &[SpdMatrix], class_b: &[SpdMatrix], k_pairs: usize) -> Result<CspFilters> {
    let sa = average(class_a)?;
    let sb = average(class_b)?;
    let c = sa.nrows();
    if sb.nrows() != c {
        return Err(Error::InvalidArgument("class covariances differ in dimension".into()));
    }
    if k_pairs == 0 || 2 * k_pairs > c {
        return Err(Error::InvalidArgument(format!(
            "{k_pairs} filter pairs do not fit {c} channels"
        )));
    }
    let composite = symmetrize(&sa + &sb);
    let chol = match composite.clone().cholesky() {
        Some(ch) => ch,
        None => {
            let ridge = SINGULAR_RIDGE * composite.trace().abs().max(f64::MIN_POSITIVE) / c as f64;
            log::warn!("composite covariance singular; adding ridge {ridge:e}");
            (composite + DMatrix::identity(c, c) * ridge)
                .cholesky()
                .ok_or_else(|| Error::NotSpd("composite covariance even after ridge".into()))?
        }
    };
    // L⁻¹ Σa L⁻ᵀ
    let l = chol.l();
    let linv_sa = l
        .solve_lower_triangular(&sa)
        .ok_or_else(|| Error::NotSpd("triangular solve".into()))?;
    let m = l
        .solve_lower_triangular(&linv_sa.transpose())
        .ok_or_else(|| Error::NotSpd("triangular solve".into()))?;
    let eig = SymmetricEigen::new(symmetrize(m));
    // V = L⁻ᵀ U, filters are the rows of Vᵀ
    let v = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::NotSpd("triangular solve".into()))?;

    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut chosen: Vec<usize> = order[..k_pairs].iter().chain(&order[c - k_pairs..]).copied().collect();
    chosen.sort_by(|&i, &j| {
        let di = (eig.eigenvalues[i] - 0.5).abs();
        let dj = (eig.eigenvalues[j] - 0.5).abs();
        dj.total_cmp(&di)
    });
    let mut filters = DMatrix::zeros(chosen.len(), c);
    for (r, &i) in chosen.iter().enumerate() {
        filters.set_row(r, &v.column(i).transpose());
    }
    Ok(CspFilters {
        filters,
        eigenvalues: chosen.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}

/// Normalized log-variance features `log(var_i / Σ_j var_j)`.
pub fn csp_features(window: &DMatrix<f64>, filters: &CspFilters) -> Result<Vec<f64>> {
    if window.nrows() != filters.filters.ncols() {
        return Err(Error::InvalidArgument(format!(
            "window has {} channels, filters expect {}",
            window.nrows(),
            filters.filters.ncols()
        )));
    }
    let z = &filters.filters * window;
    let t = z.ncols() as f64;
    let vars: Vec<f64> = z
        .row_iter()
        .map(|r| {
            let m = r.mean();
            r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (t - 1.0)
        })
        .collect();
    let total: f64 = vars.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let f: Vec<f64> = vars.iter().map(|v| (v / total).ln()).collect();
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("CSP features".into()));
    }
    Ok(f)
}
