//! Small dense linear-algebra helpers shared by the barrier and walk modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated when wrapping a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense symmetric positive-definite matrix with cached factorization and
/// log-determinant. The caches are populated on first use.
#[derive(Clone, Debug)]
pub struct SymPd {
    mat: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    log_det: Option<f64>,
}

impl SymPd {
    /// Wraps a matrix, symmetrizing tiny asymmetries and rejecting real ones.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Shape(format!(
                "expected square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.amax().max(1e-300);
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                if (mat[(i, j)] - mat[(j, i)]).abs() > SYMMETRY_TOL * scale.max(1.0) {
                    return Err(Error::Shape(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        mat[(i, j)],
                        mat[(j, i)]
                    )));
                }
            }
        }
        let sym = 0.5 * (&mat + mat.transpose());
        Ok(Self { mat: sym, chol: None, log_det: None })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// Cholesky factor, computed once. Fails when the matrix is not PD.
    pub fn cholesky(&mut self) -> Result<&Cholesky<f64, Dyn>> {
        if self.chol.is_none() {
            let chol = Cholesky::new(self.mat.clone())
                .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))?;
            self.chol = Some(chol);
        }
        Ok(self.chol.as_ref().unwrap())
    }

    /// log det of the matrix, via the Cholesky diagonal.
    pub fn log_det(&mut self) -> Result<f64> {
        if let Some(ld) = self.log_det {
            return Ok(ld);
        }
        let chol = self.cholesky()?;
        let ld = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        self.log_det = Some(ld);
        Ok(ld)
    }

    /// v^T A v.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        (&self.mat * v).dot(v)
    }

    /// A^{-1} b.
    pub fn solve(&mut self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let chol = self.cholesky()?;
        Ok(chol.solve(b))
    }

    /// Draws from N(0, scale^2 A^{-1}) using the inverse transpose factor.
    pub fn sample_gaussian<R: Rng + ?Sized>(&mut self, scale: f64, rng: &mut R) -> Result<DVector<f64>> {
        let n = self.dim();
        let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let chol = self.cholesky()?;
        // A = L L^T, so L^{-T} xi has covariance A^{-1}.
        let lt = chol.l_dirty().transpose();
        let v = lt
            .solve_upper_triangular(&xi)
            .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
        Ok(scale * v)
    }
}

/// Symmetric part of a square matrix.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Moore-Penrose pseudo-inverse through SVD with a relative rank cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = 1e-12 * max_sv;
    svd.pseudo_inverse(eps).expect("svd with u/v requested")
}

/// Symmetric square root of a PSD matrix via eigendecomposition.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-10 {
            return Err(Error::Factorization(format!(
                "matrix has negative eigenvalue {v:.3e}; no real square root"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Inverse of a symmetric PD matrix via Cholesky.
pub fn pd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(symmetrize(m))
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))
}

/// Checks that all entries are finite.
pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Frobenius inner product tr(A^T B).
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn sym_spectral_radius(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sympd_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SymPd::new(m).is_err());
    }

    #[test]
    fn sympd_logdet_matches_direct() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let mut s = SymPd::new(m.clone()).unwrap();
        assert_relative_eq!(s.log_det().unwrap(), (4.0f64 * 3.0 - 1.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_draw_covariance_is_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mut s = SymPd::new(m.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let v = s.sample_gaussian(1.0, &mut rng).unwrap();
            acc += &v * v.transpose();
        }
        acc /= n as f64;
        let inv = pd_inverse(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((acc[(i, j)] - inv[(i, j)]).abs() < 0.02);
            }
        }
    }

    #[test]
    fn pseudo_inverse_of_projection() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let p = &m * pseudo_inverse(&(m.transpose() * &m)) * m.transpose();
        assert_relative_eq!(p[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 1)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = sym_sqrt(&m).unwrap();
        assert_relative_eq!((&r * &r)[(0, 1)], 0.5, epsilon = 1e-10);
    }
}
