//! Symmetric positive-definite matrices and eigen-based matrix functions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Dense symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Validates symmetry (relative 1e-10) and strict positivity of the spectrum.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSpd(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SPD candidate".into()));
        }
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSpd(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let m = symmetrize(m);
        let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::NotSpd(format!("minimum eigenvalue {min:e}")));
        }
        Ok(SpdMatrix(m))
    }

    /// Skips the spectral check; the caller guarantees positive definiteness.
    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        SpdMatrix(symmetrize(m))
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.0.clone())
    }

    /// `f` applied to the spectrum: `U diag(f(λ)) Uᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        spectral_map(&self.eigen(), f)
    }

    pub fn sqrt(&self) -> SpdMatrix {
        SpdMatrix::new_unchecked(self.map_spectrum(f64::sqrt))
    }

    pub fn inv_sqrt(&self) -> SpdMatrix {
        SpdMatrix::new_unchecked(self.map_spectrum(|l| 1.0 / l.sqrt()))
    }

    pub fn inverse(&self) -> SpdMatrix {
        SpdMatrix::new_unchecked(self.map_spectrum(|l| 1.0 / l))
    }

    pub fn powf(&self, p: f64) -> SpdMatrix {
        SpdMatrix::new_unchecked(self.map_spectrum(|l| l.powf(p)))
    }

    /// Matrix logarithm (symmetric, not necessarily SPD).
    pub fn log(&self) -> DMatrix<f64> {
        self.map_spectrum(f64::ln)
    }

    /// `W A Wᵀ` for an invertible `W`.
    pub fn congruence(&self, w: &DMatrix<f64>) -> SpdMatrix {
        SpdMatrix::new_unchecked(w * &self.0 * w.transpose())
    }
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

pub fn spectral_map(
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let fl = f(l);
        scaled.column_mut(j).scale_mut(fl);
    }
    symmetrize(scaled * u.transpose())
}

/// Exponential of a symmetric matrix (always SPD).
pub fn expm_sym(s: &DMatrix<f64>) -> SpdMatrix {
    let eig = SymmetricEigen::new(symmetrize(s.clone()));
    SpdMatrix::new_unchecked(spectral_map(&eig, f64::exp))
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Haar-ish orthogonal matrix from the QR of a Gaussian matrix.
    pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| -> f64 { StandardNormal.sample(rng) });
        g.qr().q()
    }

    /// SPD matrix with spectrum log-uniform in [lo, hi].
    pub fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> SpdMatrix {
        let q = random_orthogonal(n, rng);
        let d = DVector::from_fn(n, |_, _| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp());
        SpdMatrix::new(symmetrize(&q * DMatrix::from_diagonal(&d) * q.transpose())).unwrap()
    }

    pub fn random_invertible(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let q1 = random_orthogonal(n, rng);
        let q2 = random_orthogonal(n, rng);
        let d = DVector::from_fn(n, |_, _| 0.5 + 1.5 * rng.random::<f64>());
        q1 * DMatrix::from_diagonal(&d) * q2
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use crate::rng::RngSeed;

    #[test]
    fn rejects_non_spd() {
        assert!(SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
        assert!(SpdMatrix::new(DMatrix::from_row_slice(2, 3, &[1.0; 6])).is_err());
        assert!(SpdMatrix::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])).is_err());
    }

    #[test]
    fn sqrt_squared_recovers_matrix() {
        let mut rng = RngSeed(3).rng();
        let a = random_spd(6, 0.1, 10.0, &mut rng);
        let s = a.sqrt();
        let back = s.matrix() * s.matrix();
        assert!((back - a.matrix()).amax() < 1e-10);
        let isq = a.inv_sqrt();
        let id = isq.matrix() * a.matrix() * isq.matrix();
        assert!((id - DMatrix::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn exp_inverts_log() {
        let mut rng = RngSeed(4).rng();
        let a = random_spd(5, 0.2, 5.0, &mut rng);
        let back = expm_sym(&a.log());
        assert!((back.matrix() - a.matrix()).amax() < 1e-10);
    }
}
