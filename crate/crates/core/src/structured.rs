//! Closed-form barriers for quadratic regions, Gaussian epigraphs,
//! second-order cones, and the per-coordinate entropy / power / log / exp
//! epigraphs, each carrying its required scaling.
//!
//! All gradients and Hessians here are hand-derived from the scalar forms and
//! validated against finite differences in the test suite; walk hot loops
//! need exact, cheap evaluators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, sym_min_eigenvalue};
use crate::metric::{Amenability, Cert, Metric};
use crate::model::{Direction, Point};

// ---------------------------------------------------------------------------
// Barriers of the form -log u(y) with quadratic margin u
// ---------------------------------------------------------------------------

/// Barrier `-log u(y)` for a quadratic margin `u(y) = c0 + lin.y - y^T C y / 2`
/// with constant curvature `C = -hess u`. Covers the ellipsoid, the Gaussian
/// epigraph and the second-order cone; the third derivative of `u` vanishes,
/// which keeps every evaluator in closed form.
#[derive(Clone, Debug)]
pub struct QuadMarginBarrier {
    curv: DMatrix<f64>,
    lin: DVector<f64>,
    c0: f64,
    scaling: f64,
    nu_base: f64,
    /// Second-order cones consist of two sheets; the walk must stay on the
    /// one with positive last coordinate.
    positive_last: bool,
    ssc: Cert,
}

impl QuadMarginBarrier {
    fn margin(&self, y: &Point) -> f64 {
        self.c0 + self.lin.dot(y) - 0.5 * (&self.curv * y).dot(y)
    }

    fn grad_margin(&self, y: &Point) -> DVector<f64> {
        &self.lin - &self.curv * y
    }

    fn feasible(&self, y: &Point) -> bool {
        if y.len() != self.dim() || !crate::linalg::all_finite(y) {
            return false;
        }
        if self.positive_last && y[y.len() - 1] <= 0.0 {
            return false;
        }
        self.margin(y) > 0.0
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }
}

impl Metric for QuadMarginBarrier {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.lin.len()
    }

    fn amenability(&self) -> Amenability {
        let nu = self.scaling * self.nu_base;
        let nu_bar = self.scaling * Amenability::nu_bar_from_nu(self.nu_base);
        Amenability::new(nu, nu_bar, self.scaling).with_flags(self.ssc, Cert::Holds, Cert::Holds)
    }

    fn value(&self, y: &Point) -> Result<DMatrix<f64>> {
        if !self.feasible(y) {
            return Err(Error::NotInterior("outside quadratic margin".into()));
        }
        let u = self.margin(y);
        let gu = self.grad_margin(y);
        let g = &self.curv / u + &gu * gu.transpose() / (u * u);
        Ok(self.scaling * g)
    }

    fn deriv(&self, y: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        if !self.feasible(y) {
            return Err(Error::NotInterior("outside quadratic margin".into()));
        }
        let u = self.margin(y);
        let gu = self.grad_margin(y);
        let ch = &self.curv * h;
        let guh = gu.dot(h);
        let u2 = u * u;
        let u3 = u2 * u;
        let mut d = -(guh / u2) * &self.curv;
        d -= (&ch * gu.transpose() + &gu * ch.transpose()) / u2;
        d -= (2.0 * guh / u3) * (&gu * gu.transpose());
        Ok(self.scaling * d)
    }

    fn second_deriv(&self, y: &Point, h: &Direction) -> Option<Result<DMatrix<f64>>> {
        if !self.feasible(y) {
            return Some(Err(Error::NotInterior("outside quadratic margin".into())));
        }
        let u = self.margin(y);
        let gu = self.grad_margin(y);
        let ch = &self.curv * h;
        let guh = gu.dot(h);
        let hch = ch.dot(h);
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let outer_gu = &gu * gu.transpose();
        let cross = &ch * gu.transpose() + &gu * ch.transpose();
        let mut d2 = (hch / u2) * &self.curv + (2.0 * guh * guh / u3) * &self.curv;
        d2 += (2.0 / u2) * (&ch * ch.transpose());
        d2 += (4.0 * guh / u3) * cross;
        d2 += (2.0 * hch / u3) * &outer_gu;
        d2 += (6.0 * guh * guh / u4) * outer_gu;
        Some(Ok(self.scaling * d2))
    }

    fn barrier(&self, y: &Point) -> f64 {
        if !self.feasible(y) {
            return f64::INFINITY;
        }
        -self.scaling * self.margin(y).ln()
    }

    fn barrier_grad(&self, y: &Point) -> Result<DVector<f64>> {
        if !self.feasible(y) {
            return Err(Error::NotInterior("outside quadratic margin".into()));
        }
        Ok(-self.scaling / self.margin(y) * self.grad_margin(y))
    }
}

/// Barrier for `{x : x^T Q x / 2 + p^T x + l <= 0}`, scaled by the ambient
/// dimension `d`.
pub fn ellipsoid_barrier(q: DMatrix<f64>, p: DVector<f64>, l: f64) -> Result<QuadMarginBarrier> {
    let d = p.len();
    if q.nrows() != d || q.ncols() != d {
        return Err(Error::Dimension("Q and p dimensions differ".into()));
    }
    if q.amax() == 0.0 {
        return Err(Error::Shape("Q must be nonzero".into()));
    }
    let min_eig = sym_min_eigenvalue(&q);
    if min_eig < -1e-10 * q.amax() {
        return Err(Error::Shape(format!("Q has negative eigenvalue {min_eig:.3e}")));
    }
    // Interior is non-empty iff sup u > 0 for u(x) = -l - p.x - x^T Q x / 2.
    let lin = -p;
    let y_star = pseudo_inverse(&q) * &lin;
    let residual = (&q * &y_star - &lin).norm();
    if residual <= 1e-9 * lin.norm().max(1.0) {
        let u_star = -l + 0.5 * lin.dot(&y_star);
        if u_star <= 0.0 {
            return Err(Error::InfeasibleBarrier(format!("maximum margin {u_star:.3e} <= 0")));
        }
    }
    let ssc = if min_eig > 1e-12 * q.amax() { Cert::Holds } else { Cert::Unverified };
    Ok(QuadMarginBarrier {
        curv: q,
        lin,
        c0: -l,
        scaling: d as f64,
        nu_base: 1.0,
        positive_last: false,
        ssc,
    })
}

/// Barrier for the Gaussian epigraph `{(x,t) : ||x - mu||^2_Sigma / 2 <= t}`
/// on `R^{d+1}`, scaled by the domain dimension `d+1`.
pub fn gaussian_epigraph_barrier(sigma: DMatrix<f64>, mu: DVector<f64>) -> Result<QuadMarginBarrier> {
    let d = mu.len();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Dimension("Sigma and mu dimensions differ".into()));
    }
    if sym_min_eigenvalue(&sigma) <= 0.0 {
        return Err(Error::Shape("Sigma must be positive definite".into()));
    }
    // u(x,t) = t - (x-mu)^T Sigma (x-mu) / 2
    let mut curv = DMatrix::zeros(d + 1, d + 1);
    curv.view_mut((0, 0), (d, d)).copy_from(&sigma);
    let mut lin = DVector::zeros(d + 1);
    let smu = &sigma * &mu;
    lin.rows_mut(0, d).copy_from(&smu);
    lin[d] = 1.0;
    let c0 = -0.5 * mu.dot(&smu);
    Ok(QuadMarginBarrier {
        curv,
        lin,
        c0,
        scaling: (d + 1) as f64,
        nu_base: 1.0,
        positive_last: false,
        ssc: Cert::Holds,
    })
}

/// Barrier for the second-order cone `{(x,t) : ||x - mu||_Sigma <= t}` on
/// `R^{d+1}`, scaled by the domain dimension `d+1`.
pub fn soc_barrier(sigma: DMatrix<f64>, mu: DVector<f64>) -> Result<QuadMarginBarrier> {
    let d = mu.len();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Dimension("Sigma and mu dimensions differ".into()));
    }
    if sym_min_eigenvalue(&sigma) <= 0.0 {
        return Err(Error::Shape("Sigma must be positive definite".into()));
    }
    // u(x,t) = t^2 - (x-mu)^T Sigma (x-mu)
    let mut curv = DMatrix::zeros(d + 1, d + 1);
    curv.view_mut((0, 0), (d, d)).copy_from(&(2.0 * &sigma));
    curv[(d, d)] = -2.0;
    let mut lin = DVector::zeros(d + 1);
    let smu = &sigma * &mu;
    lin.rows_mut(0, d).copy_from(&(2.0 * smu.clone()));
    let c0 = -mu.dot(&smu);
    Ok(QuadMarginBarrier {
        curv,
        lin,
        c0,
        scaling: (d + 1) as f64,
        nu_base: 2.0,
        positive_last: true,
        ssc: Cert::Holds,
    })
}

// ---------------------------------------------------------------------------
// Separable per-coordinate epigraph barriers
// ---------------------------------------------------------------------------

/// The scalar epigraph families of the barrier handbook. Each is a barrier
/// `F(x,t) = -log u(x,t) + rho` on a 2-dimensional level set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// `{x >= 0, x log x <= t}`, `F = -log(t - x log x) - 36 log x`.
    Entropy,
    /// `{|x|^p <= t}`, `F = -log(t^{2/p} - x^2) - 72 log t`.
    Power,
    /// `{-log x <= t, x > 0}`, `F = -log(t + log x) - 36 log x`.
    Log,
    /// `{e^x <= t}`, `F = -log(log t - x) - 36 log t`.
    Exp,
}

/// Scalar 2D evaluators for one coordinate pair `(x_i, t_i)`.
#[derive(Clone, Copy, Debug)]
pub struct Pair {
    pub kind: PairKind,
    /// Exponent for `Power`; ignored otherwise.
    pub exponent: f64,
}

impl Pair {
    pub fn feasible(&self, x: f64, t: f64) -> bool {
        if !x.is_finite() || !t.is_finite() {
            return false;
        }
        match self.kind {
            PairKind::Entropy => x > 0.0 && t > x * x.ln(),
            PairKind::Power => t > 0.0 && t.powf(2.0 / self.exponent) > x * x,
            PairKind::Log => x > 0.0 && t + x.ln() > 0.0,
            PairKind::Exp => t > 0.0 && t.ln() > x,
        }
    }

    fn margin(&self, x: f64, t: f64) -> f64 {
        match self.kind {
            PairKind::Entropy => t - x * x.ln(),
            PairKind::Power => t.powf(2.0 / self.exponent) - x * x,
            PairKind::Log => t + x.ln(),
            PairKind::Exp => t.ln() - x,
        }
    }

    /// grad and Hessian of the margin u, plus D(hess u)[h].
    fn margin_parts(&self, x: f64, t: f64, hx: f64, ht: f64) -> ([f64; 2], [f64; 3], [f64; 3]) {
        match self.kind {
            PairKind::Entropy => (
                [-x.ln() - 1.0, 1.0],
                [-1.0 / x, 0.0, 0.0],
                [hx / (x * x), 0.0, 0.0],
            ),
            PairKind::Power => {
                let q = 2.0 / self.exponent;
                (
                    [-2.0 * x, q * t.powf(q - 1.0)],
                    [-2.0, 0.0, q * (q - 1.0) * t.powf(q - 2.0)],
                    [0.0, 0.0, q * (q - 1.0) * (q - 2.0) * t.powf(q - 3.0) * ht],
                )
            }
            PairKind::Log => (
                [1.0 / x, 1.0],
                [-1.0 / (x * x), 0.0, 0.0],
                [2.0 * hx / (x * x * x), 0.0, 0.0],
            ),
            PairKind::Exp => (
                [-1.0, 1.0 / t],
                [0.0, 0.0, -1.0 / (t * t)],
                [0.0, 0.0, 2.0 * ht / (t * t * t)],
            ),
        }
    }

    /// Auxiliary log term: (value, grad, hess, D(hess)[h]).
    fn rho_parts(&self, x: f64, t: f64, hx: f64, ht: f64) -> (f64, [f64; 2], [f64; 3], [f64; 3]) {
        match self.kind {
            PairKind::Entropy | PairKind::Log => (
                -36.0 * x.ln(),
                [-36.0 / x, 0.0],
                [36.0 / (x * x), 0.0, 0.0],
                [-72.0 * hx / (x * x * x), 0.0, 0.0],
            ),
            PairKind::Power => (
                -72.0 * t.ln(),
                [0.0, -72.0 / t],
                [0.0, 0.0, 72.0 / (t * t)],
                [0.0, 0.0, -144.0 * ht / (t * t * t)],
            ),
            PairKind::Exp => (
                -36.0 * t.ln(),
                [0.0, -36.0 / t],
                [0.0, 0.0, 36.0 / (t * t)],
                [0.0, 0.0, -72.0 * ht / (t * t * t)],
            ),
        }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        if !self.feasible(x, t) {
            return f64::INFINITY;
        }
        let (rho, _, _, _) = self.rho_parts(x, t, 0.0, 0.0);
        -self.margin(x, t).ln() + rho
    }

    pub fn grad(&self, x: f64, t: f64) -> [f64; 2] {
        let u = self.margin(x, t);
        let (gu, _, _) = self.margin_parts(x, t, 0.0, 0.0);
        let (_, gr, _, _) = self.rho_parts(x, t, 0.0, 0.0);
        [-gu[0] / u + gr[0], -gu[1] / u + gr[1]]
    }

    /// Hessian of F as (xx, xt, tt).
    pub fn hess(&self, x: f64, t: f64) -> [f64; 3] {
        let u = self.margin(x, t);
        let (gu, hu, _) = self.margin_parts(x, t, 0.0, 0.0);
        let (_, _, hr, _) = self.rho_parts(x, t, 0.0, 0.0);
        let u2 = u * u;
        [
            -hu[0] / u + gu[0] * gu[0] / u2 + hr[0],
            -hu[1] / u + gu[0] * gu[1] / u2 + hr[1],
            -hu[2] / u + gu[1] * gu[1] / u2 + hr[2],
        ]
    }

    /// Directional derivative of the Hessian of F as (xx, xt, tt).
    pub fn d_hess(&self, x: f64, t: f64, hx: f64, ht: f64) -> [f64; 3] {
        let u = self.margin(x, t);
        let (gu, hu, tu) = self.margin_parts(x, t, hx, ht);
        let (_, _, _, tr) = self.rho_parts(x, t, hx, ht);
        let guh = gu[0] * hx + gu[1] * ht;
        // hess u applied to h
        let hu_h = [hu[0] * hx + hu[1] * ht, hu[1] * hx + hu[2] * ht];
        let u2 = u * u;
        let u3 = u2 * u;
        let mut out = [0.0; 3];
        let idx = [(0, 0), (0, 1), (1, 1)];
        for (k, (i, j)) in idx.into_iter().enumerate() {
            let hu_ij = hu[i + j];
            let tu_ij = tu[i + j];
            out[k] = -tu_ij / u + hu_ij * guh / u2
                + (hu_h[i] * gu[j] + gu[i] * hu_h[j]) / u2
                - 2.0 * guh * gu[i] * gu[j] / u3
                + tr[i + j];
        }
        out
    }

    /// Self-concordance parameter of the scalar barrier before scaling.
    pub fn nu_base(&self) -> f64 {
        match self.kind {
            PairKind::Entropy => 5.0,
            PairKind::Power => 72.0,
            PairKind::Log | PairKind::Exp => 37.0,
        }
    }
}

/// Block-diagonal metric for `d` independent coordinate pairs `(x_i, t_i)`
/// laid out as `(x_1..x_d, t_1..t_d)` in `R^{2d}`. The 2x2 blocks are
/// assembled lazily, never materializing more than the output matrix.
///
/// Applied scaling is `max(2, d)`: the direct-product lemma gives SSC/SLTSC
/// at the per-block dimension 2, while SASC needs the dimension scaling `d`;
/// a single metric serving all flags takes the maximum.
#[derive(Clone, Debug)]
pub struct SeparableBarrier {
    pairs: usize,
    pair: Pair,
    scaling: f64,
}

impl SeparableBarrier {
    pub fn new(pairs: usize, pair: Pair) -> Result<Self> {
        if pairs == 0 {
            return Err(Error::Shape("need at least one coordinate pair".into()));
        }
        if pair.kind == PairKind::Power && pair.exponent < 1.0 {
            return Err(Error::Shape(format!("power barrier needs p >= 1, got {}", pair.exponent)));
        }
        let scaling = (pairs as f64).max(2.0);
        Ok(Self { pairs, pair, scaling })
    }

    pub fn pair(&self) -> Pair {
        self.pair
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    fn split(&self, y: &Point) -> Result<()> {
        if y.len() != 2 * self.pairs {
            return Err(Error::Dimension(format!(
                "expected {} coordinates, got {}",
                2 * self.pairs,
                y.len()
            )));
        }
        Ok(())
    }

    fn feasible(&self, y: &Point) -> bool {
        if y.len() != 2 * self.pairs {
            return false;
        }
        (0..self.pairs).all(|i| self.pair.feasible(y[i], y[self.pairs + i]))
    }
}

impl Metric for SeparableBarrier {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        2 * self.pairs
    }

    fn amenability(&self) -> Amenability {
        let nu_c = self.pair.nu_base();
        let nu = self.scaling * self.pairs as f64 * nu_c;
        let nu_bar = self.scaling * self.pairs as f64 * Amenability::nu_bar_from_nu(nu_c);
        Amenability::new(nu, nu_bar, self.scaling).with_flags(Cert::Holds, Cert::Holds, Cert::Holds)
    }

    fn value(&self, y: &Point) -> Result<DMatrix<f64>> {
        self.split(y)?;
        if !self.feasible(y) {
            return Err(Error::NotInterior("outside epigraph domain".into()));
        }
        let d = self.pairs;
        let mut g = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            let h = self.pair.hess(y[i], y[d + i]);
            g[(i, i)] = self.scaling * h[0];
            g[(i, d + i)] = self.scaling * h[1];
            g[(d + i, i)] = self.scaling * h[1];
            g[(d + i, d + i)] = self.scaling * h[2];
        }
        Ok(g)
    }

    fn deriv(&self, y: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        self.split(y)?;
        if h.len() != 2 * self.pairs {
            return Err(Error::Dimension("direction dimension mismatch".into()));
        }
        if !self.feasible(y) {
            return Err(Error::NotInterior("outside epigraph domain".into()));
        }
        let d = self.pairs;
        let mut g = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            let dh = self.pair.d_hess(y[i], y[d + i], h[i], h[d + i]);
            g[(i, i)] = self.scaling * dh[0];
            g[(i, d + i)] = self.scaling * dh[1];
            g[(d + i, i)] = self.scaling * dh[1];
            g[(d + i, d + i)] = self.scaling * dh[2];
        }
        Ok(g)
    }

    fn barrier(&self, y: &Point) -> f64 {
        if self.split(y).is_err() || !self.feasible(y) {
            return f64::INFINITY;
        }
        let d = self.pairs;
        self.scaling * (0..d).map(|i| self.pair.value(y[i], y[d + i])).sum::<f64>()
    }

    fn barrier_grad(&self, y: &Point) -> Result<DVector<f64>> {
        self.split(y)?;
        if !self.feasible(y) {
            return Err(Error::NotInterior("outside epigraph domain".into()));
        }
        let d = self.pairs;
        let mut grad = DVector::zeros(2 * d);
        for i in 0..d {
            let g = self.pair.grad(y[i], y[d + i]);
            grad[i] = self.scaling * g[0];
            grad[d + i] = self.scaling * g[1];
        }
        Ok(grad)
    }
}

/// `d` copies of the entropy epigraph `{x_i >= 0, x_i log x_i <= t_i}`.
pub fn entropy_barrier(d: usize) -> Result<SeparableBarrier> {
    SeparableBarrier::new(d, Pair { kind: PairKind::Entropy, exponent: 0.0 })
}

/// `d` copies of the power epigraph `{|x_i|^p <= t_i}`.
pub fn power_barrier(d: usize, p: f64) -> Result<SeparableBarrier> {
    SeparableBarrier::new(d, Pair { kind: PairKind::Power, exponent: p })
}

/// `d` copies of the logarithm epigraph `{-log x_i <= t_i, x_i > 0}`.
pub fn log_epigraph_barrier(d: usize) -> Result<SeparableBarrier> {
    SeparableBarrier::new(d, Pair { kind: PairKind::Log, exponent: 0.0 })
}

/// `d` copies of the exponential epigraph `{e^{x_i} <= t_i}`.
pub fn exp_epigraph_barrier(d: usize) -> Result<SeparableBarrier> {
    SeparableBarrier::new(d, Pair { kind: PairKind::Exp, exponent: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fd_metric(metric: &dyn Metric, y: &Point, h: &Direction, eps: f64) -> DMatrix<f64> {
        let gp = metric.value(&(y + eps * h)).unwrap();
        let gm = metric.value(&(y - eps * h)).unwrap();
        (gp - gm) / (2.0 * eps)
    }

    fn fd_grad(metric: &dyn Metric, y: &Point, h: &Direction, eps: f64) -> f64 {
        (metric.barrier(&(y + eps * h)) - metric.barrier(&(y - eps * h))) / (2.0 * eps)
    }

    #[test]
    fn ellipsoid_unit_disk() {
        // Q = 2I, p = 0, l = -1: the unit disk
        let b = ellipsoid_barrier(2.0 * DMatrix::identity(2, 2), DVector::zeros(2), -1.0).unwrap();
        let x0 = DVector::zeros(2);
        assert_relative_eq!(b.barrier(&x0), 0.0, epsilon = 1e-14);
        let g = b.value(&x0).unwrap();
        // hess phi = 2I, g = d * hess = 2 d I = 4 I
        assert_relative_eq!(g[(0, 0)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(g[(0, 1)], 0.0, epsilon = 1e-12);
        // boundary blow-up
        let close = DVector::from_row_slice(&[1.0 - 1e-12, 0.0]);
        assert!(b.barrier(&close) > 20.0);
        assert_eq!(b.barrier(&DVector::from_row_slice(&[1.5, 0.0])), f64::INFINITY);
    }

    #[test]
    fn ellipsoid_rejects_empty_interior() {
        // x^2/2 <= -1 is empty
        let r = ellipsoid_barrier(DMatrix::identity(1, 1), DVector::zeros(1), 1.0);
        assert!(matches!(r, Err(Error::InfeasibleBarrier(_))));
    }

    #[test]
    fn ellipsoid_second_deriv_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = ellipsoid_barrier(2.0 * DMatrix::identity(2, 2), DVector::zeros(2), -1.0).unwrap();
        for _ in 0..30 {
            let x = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
            let h = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
            let d2 = b.second_deriv(&x, &h).unwrap().unwrap();
            assert!(sym_min_eigenvalue(&d2) >= -1e-9);
        }
    }

    #[test]
    fn gaussian_epigraph_values() {
        let b = gaussian_epigraph_barrier(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let y = DVector::from_row_slice(&[0.0, 0.0, 1.0]);
        assert_relative_eq!(b.barrier(&y), 0.0, epsilon = 1e-14);
        // t below the paraboloid is infeasible
        let y = DVector::from_row_slice(&[1.0, 1.0, 0.5]);
        assert_eq!(b.barrier(&y), f64::INFINITY);
        assert_eq!(b.scaling(), 3.0);
    }

    #[test]
    fn gaussian_epigraph_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = gaussian_epigraph_barrier(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        for _ in 0..20 {
            let x = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
            let t = 0.5 * x.norm_squared() + rng.gen_range(0.5..2.0);
            let y = DVector::from_row_slice(&[x[0], x[1], t]);
            let h = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let fd = fd_grad(&b, &y, &h, 1e-6);
            let an = b.barrier_grad(&y).unwrap().dot(&h);
            assert_relative_eq!(fd, an, max_relative = 1e-5, epsilon = 1e-7);
            let fdm = fd_metric(&b, &y, &h, 1e-6);
            let anm = b.deriv(&y, &h).unwrap();
            assert!((fdm - &anm).amax() / anm.amax().max(1.0) < 1e-4);
        }
    }

    #[test]
    fn soc_at_apex_axis() {
        let b = soc_barrier(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let y = DVector::from_row_slice(&[0.0, 0.0, 1.0]);
        assert_relative_eq!(b.barrier(&y), 0.0, epsilon = 1e-14);
        let grad = b.barrier_grad(&y).unwrap();
        // unscaled grad is (0, 0, -2); scaling (d+1) = 3 folds in
        assert_relative_eq!(grad[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(grad[2], -2.0 * 3.0, epsilon = 1e-12);
        // the mirrored sheet is rejected
        assert_eq!(b.barrier(&DVector::from_row_slice(&[0.0, 0.0, -1.0])), f64::INFINITY);
    }

    #[test]
    fn soc_self_concordance_parameter() {
        // sup_h (2 <grad phi, h> - ||h||^2_{hess phi}) = grad^T hess^{-1} grad <= 2
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = soc_barrier(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let scaling = 3.0;
        for _ in 0..40 {
            let x = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
            let t = x.norm() + rng.gen_range(0.1..2.0);
            let y = DVector::from_row_slice(&[x[0], x[1], t]);
            // strip the scaling to test the raw barrier parameter
            let grad = b.barrier_grad(&y).unwrap() / scaling;
            let hess = b.value(&y).unwrap() / scaling;
            let sol = hess.lu().solve(&grad).unwrap();
            let nu = grad.dot(&sol);
            assert!(nu <= 2.0 + 1e-9, "barrier parameter estimate {nu} > 2");
        }
    }

    #[test]
    fn soc_hessian_pd_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = soc_barrier(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        for _ in 0..30 {
            let x = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
            let t = x.norm() + rng.gen_range(0.05..2.0);
            let y = DVector::from_row_slice(&[x[0], x[1], t]);
            let g = b.value(&y).unwrap();
            assert!(nalgebra::Cholesky::new(g).is_some());
        }
    }

    #[test]
    fn entropy_reference_point_and_blocks() {
        let b = entropy_barrier(3).unwrap();
        let y = DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_relative_eq!(b.barrier(&y), 0.0, epsilon = 1e-14);
        let g = b.value(&y).unwrap();
        // cross-coordinate entries are exactly zero
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(0, 4)], 0.0);
        assert_eq!(g[(1, 3)], 0.0);
        assert!(g[(0, 3)] != 0.0, "x-t coupling within a pair");
    }

    #[test]
    fn separable_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let barriers: Vec<(SeparableBarrier, Box<dyn Fn(&mut ChaCha8Rng) -> (f64, f64)>)> = vec![
            (
                entropy_barrier(2).unwrap(),
                Box::new(|rng: &mut ChaCha8Rng| {
                    let x = rng.gen_range(0.2..2.0);
                    (x, x * f64::ln(x) + rng.gen_range(0.3..1.5))
                }),
            ),
            (
                power_barrier(2, 3.0).unwrap(),
                Box::new(|rng: &mut ChaCha8Rng| {
                    let x = rng.gen_range(-0.8..0.8);
                    (x, f64::abs(x).powf(3.0) + rng.gen_range(0.3..1.5))
                }),
            ),
            (
                log_epigraph_barrier(2).unwrap(),
                Box::new(|rng: &mut ChaCha8Rng| {
                    let x = rng.gen_range(0.2..2.0);
                    (x, -f64::ln(x) + rng.gen_range(0.3..1.5))
                }),
            ),
            (
                exp_epigraph_barrier(2).unwrap(),
                Box::new(|rng: &mut ChaCha8Rng| {
                    let x = rng.gen_range(-1.0..0.5);
                    (x, f64::exp(x) + rng.gen_range(0.3..1.5))
                }),
            ),
        ];
        for (b, draw) in &barriers {
            for _ in 0..10 {
                let (x1, t1) = draw(&mut rng);
                let (x2, t2) = draw(&mut rng);
                let y = DVector::from_row_slice(&[x1, x2, t1, t2]);
                let h = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
                let fd = fd_grad(b, &y, &h, 1e-6);
                let an = b.barrier_grad(&y).unwrap().dot(&h);
                assert_relative_eq!(fd, an, max_relative = 1e-4, epsilon = 1e-6);
                let fdm = fd_metric(b, &y, &h, 1e-5);
                let anm = b.deriv(&y, &h).unwrap();
                let rel = (fdm - &anm).amax() / anm.amax().max(1.0);
                assert!(rel < 1e-4, "{:?}: metric derivative off by {rel}", b.pair().kind);
            }
        }
    }

    #[test]
    fn power_domain_boundary() {
        let b = power_barrier(1, 2.0).unwrap();
        assert_relative_eq!(b.barrier(&DVector::from_row_slice(&[0.0, 1.0])), 0.0, epsilon = 1e-14);
        assert_eq!(b.barrier(&DVector::from_row_slice(&[2.0, 1.0])), f64::INFINITY);
    }

    #[test]
    fn log_epigraph_boundary() {
        let b = log_epigraph_barrier(1).unwrap();
        assert_eq!(b.barrier(&DVector::from_row_slice(&[1.0, 0.0])), f64::INFINITY);
        assert_relative_eq!(b.barrier(&DVector::from_row_slice(&[1.0, 1.0])), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exp_epigraph_values() {
        let b = exp_epigraph_barrier(1).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(
            b.barrier(&DVector::from_row_slice(&[0.0, e])),
            2.0 * -36.0,
            epsilon = 1e-10
        );
        assert_eq!(b.barrier(&DVector::from_row_slice(&[1.0, 1.0])), f64::INFINITY);
    }

    #[test]
    fn convexity_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let b = entropy_barrier(1).unwrap();
        for _ in 0..50 {
            let xa = rng.gen_range(0.2..2.0);
            let pa = DVector::from_row_slice(&[xa, xa * f64::ln(xa) + rng.gen_range(0.2..1.0)]);
            let xb = rng.gen_range(0.2..2.0);
            let pb = DVector::from_row_slice(&[xb, xb * f64::ln(xb) + rng.gen_range(0.2..1.0)]);
            let mid = 0.5 * (&pa + &pb);
            assert!(b.barrier(&mid) <= 0.5 * b.barrier(&pa) + 0.5 * b.barrier(&pb) + 1e-9);
        }
    }
}
