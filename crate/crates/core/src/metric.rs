//! The uniform local-metric abstraction every barrier implements.
//!
//! A [`Metric`] bundles the evaluators of a positive-definite matrix function
//! `g(x)` together with its barrier counterpart and the certified
//! amenability parameters `(nu, nu_bar)` carried by the walk and the cooling
//! schedule.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Direction, Point};

/// Status of a self-concordance property certificate for a shipped barrier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cert {
    /// Property holds at the scaling already folded into the evaluators.
    Holds,
    /// Property requires a larger declared scaling than the one applied.
    AfterScaling,
    /// No claim is made; diagnostics may still probe it empirically.
    Unverified,
}

/// Self-concordance and symmetry parameters of a metric, with the scaling
/// that has been folded into its evaluators.
#[derive(Clone, Copy, Debug)]
pub struct Amenability {
    /// Self-concordance parameter of the (scaled) barrier. NaN when unknown.
    pub nu: f64,
    /// Symmetry parameter of the (scaled) metric. NaN when unknown.
    pub nu_bar: f64,
    /// Positive scalar already multiplied into `g`, `Dg` and the barrier.
    pub applied_scaling: f64,
    pub ssc: Cert,
    pub sltsc: Cert,
    pub sasc: Cert,
}

impl Amenability {
    pub fn new(nu: f64, nu_bar: f64, applied_scaling: f64) -> Self {
        Self { nu, nu_bar, applied_scaling, ssc: Cert::Unverified, sltsc: Cert::Unverified, sasc: Cert::Unverified }
    }

    pub fn with_flags(mut self, ssc: Cert, sltsc: Cert, sasc: Cert) -> Self {
        self.ssc = ssc;
        self.sltsc = sltsc;
        self.sasc = sasc;
        self
    }

    /// Fallback symmetry bound for barriers where only `nu` is known:
    /// `nu_bar = (nu + 2 sqrt(nu))^2`.
    pub fn nu_bar_from_nu(nu: f64) -> f64 {
        let r = nu + 2.0 * nu.sqrt();
        r * r
    }
}

/// Per-point state prepared from a metric: factorizations or update chains
/// that support the walk's inner-loop queries without re-deriving `g(x)`.
pub trait MetricPoint {
    fn dim(&self) -> usize;

    /// log det g(x).
    fn log_det(&self) -> f64;

    /// Squared local norm `v^T g(x) v`.
    fn quad_form(&self, v: &DVector<f64>) -> f64;

    /// `g(x)^{-1} v`.
    fn inv_apply(&self, v: &DVector<f64>) -> DVector<f64>;

    /// Draws from `N(0, scale^2 g(x)^{-1})`.
    fn draw(&self, scale: f64, rng: &mut dyn RngCore) -> DVector<f64>;
}

/// Dense per-point state backed by a Cholesky factorization.
pub struct DensePoint {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl DensePoint {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(g.clone())
            .ok_or_else(|| Error::Factorization("metric is not positive definite".into()))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { mat: g, chol, log_det })
    }
}

impl MetricPoint for DensePoint {
    fn dim(&self) -> usize {
        self.mat.nrows()
    }

    fn log_det(&self) -> f64 {
        self.log_det
    }

    fn quad_form(&self, v: &DVector<f64>) -> f64 {
        (&self.mat * v).dot(v)
    }

    fn inv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    fn draw(&self, scale: f64, rng: &mut dyn RngCore) -> DVector<f64> {
        let xi = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = self
            .chol
            .l_dirty()
            .transpose()
            .solve_upper_triangular(&xi)
            .expect("Cholesky factor has positive diagonal");
        scale * v
    }
}

/// A local metric `g` with its barrier counterpart and certified parameters.
///
/// Evaluators treat points outside the open domain as infeasible: `barrier`
/// returns `+inf` and matrix evaluators return `Err(NotInterior)`. The
/// Metropolis filter turns both into rejected proposals.
pub trait Metric: Send + Sync {
    /// Ambient dimension of the points this metric accepts.
    fn dim(&self) -> usize;

    fn amenability(&self) -> Amenability;

    /// Clones the descriptor behind the trait object; composition wrappers
    /// need owned parts.
    fn clone_box(&self) -> Box<dyn Metric>;

    /// The matrix `g(x)`.
    fn value(&self, x: &Point) -> Result<DMatrix<f64>>;

    /// Directional derivative `Dg(x)[h]`.
    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>>;

    /// Second directional derivative `D^2 g(x)[h,h]`. Only LTSC diagnostics
    /// need it; walks never do.
    fn second_deriv(&self, _x: &Point, _h: &Direction) -> Option<Result<DMatrix<f64>>> {
        None
    }

    /// Barrier value; `+inf` outside the open domain.
    fn barrier(&self, x: &Point) -> f64;

    /// Barrier gradient.
    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>>;

    /// Prepares per-point state for walk queries. The default materializes
    /// `g(x)` densely; metrics with a fast path override this.
    fn prepare(&self, x: &Point) -> Result<Box<dyn MetricPoint>> {
        Ok(Box::new(DensePoint::new(self.value(x)?)?))
    }

    /// log det g(x).
    fn log_det(&self, x: &Point) -> Result<f64> {
        Ok(self.prepare(x)?.log_det())
    }
}

impl Clone for Box<dyn Metric> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Local norm `||v||_g = sqrt(v^T g v)` with a positive-definiteness check.
pub fn local_norm(g: &DMatrix<f64>, v: &DVector<f64>) -> Result<f64> {
    if g.nrows() != v.len() {
        return Err(Error::Dimension(format!(
            "metric is {}x{} but vector has length {}",
            g.nrows(),
            g.ncols(),
            v.len()
        )));
    }
    if Cholesky::new(g.clone()).is_none() {
        return Err(Error::Factorization("metric is not positive definite".into()));
    }
    Ok((g * v).dot(v).max(0.0).sqrt())
}

/// Dikin ellipsoid `{y : ||y - center||_metric <= radius}`.
#[derive(Clone, Debug)]
pub struct DikinEllipsoid {
    pub center: Point,
    pub metric: DMatrix<f64>,
    pub radius: f64,
}

impl DikinEllipsoid {
    pub fn new(center: Point, metric: DMatrix<f64>, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Shape(format!("radius must be positive, got {radius}")));
        }
        if metric.nrows() != center.len() {
            return Err(Error::Dimension("metric and center dimensions differ".into()));
        }
        Ok(Self { center, metric, radius })
    }

    /// Membership test `||y - center||_g <= radius`.
    pub fn contains(&self, y: &Point) -> Result<bool> {
        let diff = y - &self.center;
        Ok(local_norm(&self.metric, &diff)? <= self.radius)
    }
}

/// Aggregates amenability parameters of `k` parts with the `(I+J)`-style
/// prefactor: `(k * sum(nu_i), k * sum(nu_bar_i))`.
pub fn combined_amenability(parts: &[Amenability]) -> Result<(f64, f64)> {
    if parts.is_empty() {
        return Err(Error::MissingParameter("combined_amenability needs at least one part".into()));
    }
    let k = parts.len() as f64;
    let mut nu = 0.0;
    let mut nu_bar = 0.0;
    for (i, p) in parts.iter().enumerate() {
        if !p.nu.is_finite() {
            return Err(Error::MissingParameter(format!("part {i} has no self-concordance parameter")));
        }
        if !p.nu_bar.is_finite() {
            return Err(Error::MissingParameter(format!("part {i} has no symmetry parameter")));
        }
        nu += p.nu;
        nu_bar += p.nu_bar;
    }
    Ok((k * nu, k * nu_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn local_norm_euclidean() {
        let g = DMatrix::identity(2, 2);
        let v = DVector::from_row_slice(&[3.0, 4.0]);
        assert_relative_eq!(local_norm(&g, &v).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn local_norm_diagonal() {
        let g = DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 9.0]));
        let v = DVector::from_row_slice(&[1.0, 1.0]);
        assert_relative_eq!(local_norm(&g, &v).unwrap(), 13.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn local_norm_rejects_non_pd() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let v = DVector::from_row_slice(&[1.0, 0.0]);
        assert!(matches!(local_norm(&g, &v), Err(Error::Factorization(_))));
    }

    #[test]
    fn dikin_membership() {
        let e = DikinEllipsoid::new(DVector::zeros(2), DMatrix::identity(2, 2), 1.0).unwrap();
        assert!(e.contains(&DVector::zeros(2)).unwrap());
        assert!(!e.contains(&DVector::from_row_slice(&[2.0, 0.0])).unwrap());
    }

    #[test]
    fn combined_prefactor() {
        let a = Amenability::new(3.0, 5.0, 1.0);
        let b = Amenability::new(4.0, 6.0, 1.0);
        let (nu, nu_bar) = combined_amenability(&[a, b]).unwrap();
        assert_relative_eq!(nu, 2.0 * 7.0);
        assert_relative_eq!(nu_bar, 2.0 * 11.0);
    }

    #[test]
    fn combined_identical_parts_scale_quadratically() {
        let a = Amenability::new(2.0, 3.0, 1.0);
        let parts = vec![a; 4];
        let (nu, nu_bar) = combined_amenability(&parts).unwrap();
        assert_relative_eq!(nu, 16.0 * 2.0);
        assert_relative_eq!(nu_bar, 16.0 * 3.0);
    }

    #[test]
    fn combined_rejects_missing_nu() {
        let a = Amenability::new(f64::NAN, 1.0, 1.0);
        assert!(matches!(combined_amenability(&[a]), Err(Error::MissingParameter(_))));
    }
}
