//! Finite-difference probes used to cross-check the closed-form evaluators.

use nalgebra::{DMatrix, DVector};

use crate::metric::Metric;
use crate::model::{Direction, Point};

/// Central difference of a scalar function along a direction.
pub fn directional_derivative<F: Fn(&Point) -> f64>(f: F, x: &Point, h: &Direction, eps: f64) -> f64 {
    (f(&(x + eps * h)) - f(&(x - eps * h))) / (2.0 * eps)
}

/// Second central difference of a scalar function along a direction.
pub fn second_directional_derivative<F: Fn(&Point) -> f64>(
    f: F,
    x: &Point,
    h: &Direction,
    eps: f64,
) -> f64 {
    (f(&(x + eps * h)) - 2.0 * f(x) + f(&(x - eps * h))) / (eps * eps)
}

/// Fourth central difference (five-point stencil) along a direction.
pub fn fourth_directional_derivative<F: Fn(&Point) -> f64>(
    f: F,
    x: &Point,
    h: &Direction,
    eps: f64,
) -> f64 {
    (f(&(x + 2.0 * eps * h)) - 4.0 * f(&(x + eps * h)) + 6.0 * f(x) - 4.0 * f(&(x - eps * h))
        + f(&(x - 2.0 * eps * h)))
        / eps.powi(4)
}

/// Central difference of the metric `g` along a direction.
pub fn metric_derivative_fd(metric: &dyn Metric, x: &Point, h: &Direction, eps: f64) -> Option<DMatrix<f64>> {
    let gp = metric.value(&(x + eps * h)).ok()?;
    let gm = metric.value(&(x - eps * h)).ok()?;
    Some((gp - gm) / (2.0 * eps))
}

/// Second central difference of the metric along a direction.
pub fn metric_second_derivative_fd(
    metric: &dyn Metric,
    x: &Point,
    h: &Direction,
    eps: f64,
) -> Option<DMatrix<f64>> {
    let gp = metric.value(&(x + eps * h)).ok()?;
    let g0 = metric.value(x).ok()?;
    let gm = metric.value(&(x - eps * h)).ok()?;
    Some((gp - 2.0 * g0 + gm) / (eps * eps))
}

/// Gradient by coordinate-wise central differences.
pub fn gradient_fd<F: Fn(&Point) -> f64>(f: F, x: &Point, eps: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + eps;
        let fp = f(&xp);
        xp[i] = x[i] - eps;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * eps);
    }
    g
}
