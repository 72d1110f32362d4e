//! Metrics for polytopes `K = {x : Ax >= b}`: the logarithmic barrier, the
//! Vaidya metric, and the Lewis-weight metric, together with leverage-score
//! and Lewis-weight computation and their directional derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{pd_inverse, pseudo_inverse};
use crate::metric::{Amenability, Cert, Metric};
use crate::model::{Direction, Point};

/// Slack data at an interior point: `s_x = Ax - b` and `A_x = S_x^{-1} A`.
#[derive(Clone, Debug)]
pub struct SlackState {
    pub slack: DVector<f64>,
    pub a_x: DMatrix<f64>,
}

/// Builds the slack state, failing when any slack is non-positive.
pub fn slack_state(a: &DMatrix<f64>, b: &DVector<f64>, x: &Point) -> Result<SlackState> {
    if a.ncols() != x.len() || a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "A is {}x{}, b has {}, x has {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            x.len()
        )));
    }
    let slack = a * x - b;
    if let Some((i, s)) = slack.iter().enumerate().find(|(_, s)| **s <= 0.0) {
        return Err(Error::NotInterior(format!("slack {i} is {s} <= 0")));
    }
    let mut a_x = a.clone();
    for i in 0..a.nrows() {
        let inv = 1.0 / slack[i];
        for j in 0..a.ncols() {
            a_x[(i, j)] *= inv;
        }
    }
    Ok(SlackState { slack, a_x })
}

/// Leverage scores `sigma(M) = diag(M (M^T M)^+ M^T)`.
#[derive(Clone, Debug)]
pub struct LeverageScores {
    pub sigma: DVector<f64>,
}

pub fn leverage_scores(m: &DMatrix<f64>) -> LeverageScores {
    let gram = m.transpose() * m;
    let ginv = pseudo_inverse(&gram);
    let sigma = DVector::from_fn(m.nrows(), |i, _| {
        let row = m.row(i).transpose();
        (&ginv * &row).dot(&row)
    });
    LeverageScores { sigma }
}

/// Projection matrix `P(M) = M (M^T M)^+ M^T`.
fn projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = m.transpose() * m;
    m * pseudo_inverse(&gram) * m.transpose()
}

/// Directional derivative of the leverage scores of `A_x`:
/// `sigma' = -2 Lambda_x s_{x,h}` with `Lambda_x = Sigma_x - P_x o P_x`.
pub fn d_leverage(a: &DMatrix<f64>, b: &DVector<f64>, x: &Point, h: &Direction) -> Result<DVector<f64>> {
    let st = slack_state(a, b, x)?;
    let p = projection(&st.a_x);
    let s_xh = &st.a_x * h;
    let lambda = lambda_from_projection(&p);
    Ok(-2.0 * (lambda * s_xh))
}

/// `Lambda = Diag(diag P) - P o P`.
fn lambda_from_projection(p: &DMatrix<f64>) -> DMatrix<f64> {
    let m = p.nrows();
    let mut lambda = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            lambda[(i, j)] = -p[(i, j)] * p[(i, j)];
        }
        lambda[(i, i)] += p[(i, i)];
    }
    lambda
}

// ---------------------------------------------------------------------------
// Logarithmic barrier
// ---------------------------------------------------------------------------

/// Hessian metric of the logarithmic barrier `-sum log(a_i^T x - b_i)`.
///
/// `(m, m)`-Dikin-amenable without extra scaling.
#[derive(Clone, Debug)]
pub struct LogBarrier {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LogBarrier {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension("A and b row counts differ".into()));
        }
        for i in 0..a.nrows() {
            if a.row(i).iter().all(|v| *v == 0.0) {
                return Err(Error::Shape(format!("row {i} of A is all zero")));
            }
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn constraints(&self) -> usize {
        self.a.nrows()
    }
}

/// `g(x) = A_x^T A_x`.
///
/// Rank-deficient instances (m < d or degenerate rows) yield a singular
/// matrix; standalone use surfaces that as a factorization error when the
/// point is prepared, while composites may sum such blocks freely.
pub fn log_metric(a: &DMatrix<f64>, b: &DVector<f64>, x: &Point) -> Result<DMatrix<f64>> {
    let st = slack_state(a, b, x)?;
    Ok(st.a_x.transpose() * &st.a_x)
}

/// `Dg(x)[h] = -2 A_x^T S_{x,h} A_x` with `S_{x,h} = Diag(A_x h)`.
pub fn d_log_metric(a: &DMatrix<f64>, b: &DVector<f64>, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
    let st = slack_state(a, b, x)?;
    let s_xh = &st.a_x * h;
    let mut scaled = st.a_x.clone();
    for i in 0..scaled.nrows() {
        let f = s_xh[i];
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= f;
        }
    }
    Ok(-2.0 * st.a_x.transpose() * scaled)
}

impl Metric for LogBarrier {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn amenability(&self) -> Amenability {
        let m = self.a.nrows() as f64;
        Amenability::new(m, m, 1.0).with_flags(Cert::Holds, Cert::Holds, Cert::Holds)
    }

    fn value(&self, x: &Point) -> Result<DMatrix<f64>> {
        log_metric(&self.a, &self.b, x)
    }

    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        d_log_metric(&self.a, &self.b, x, h)
    }

    fn second_deriv(&self, x: &Point, h: &Direction) -> Option<Result<DMatrix<f64>>> {
        // D^2 g(x)[h,h] = 6 A_x^T S_{x,h}^2 A_x >= 0.
        Some(slack_state(&self.a, &self.b, x).map(|st| {
            let s_xh = &st.a_x * h;
            let mut scaled = st.a_x.clone();
            for i in 0..scaled.nrows() {
                let f = s_xh[i] * s_xh[i];
                for j in 0..scaled.ncols() {
                    scaled[(i, j)] *= f;
                }
            }
            6.0 * st.a_x.transpose() * scaled
        }))
    }

    fn barrier(&self, x: &Point) -> f64 {
        let slack = &self.a * x - &self.b;
        let mut phi = 0.0;
        for s in slack.iter() {
            if *s <= 0.0 {
                return f64::INFINITY;
            }
            phi -= s.ln();
        }
        phi
    }

    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>> {
        let st = slack_state(&self.a, &self.b, x)?;
        let ones = DVector::from_element(st.a_x.nrows(), 1.0);
        Ok(-(st.a_x.transpose() * ones))
    }
}

// ---------------------------------------------------------------------------
// Vaidya metric
// ---------------------------------------------------------------------------

/// Vaidya metric `c sqrt(m/d) A_x^T (Sigma_x + (d/m) I) A_x`, `c = 22` by
/// default with the 44-scaled variant available for walk code that wants it.
#[derive(Clone, Debug)]
pub struct VaidyaMetric {
    a: DMatrix<f64>,
    b: DVector<f64>,
    prefactor: f64,
}

impl VaidyaMetric {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Self::with_prefactor(a, b, 22.0)
    }

    /// The 44-scaled variant.
    pub fn doubled(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Self::with_prefactor(a, b, 44.0)
    }

    pub fn with_prefactor(a: DMatrix<f64>, b: DVector<f64>, prefactor: f64) -> Result<Self> {
        if a.nrows() < a.ncols() {
            return Err(Error::Shape(format!(
                "Vaidya metric needs m >= d, got m = {}, d = {}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() != b.len() {
            return Err(Error::Dimension("A and b row counts differ".into()));
        }
        Ok(Self { a, b, prefactor })
    }

    fn scale(&self) -> f64 {
        let (m, d) = (self.a.nrows() as f64, self.a.ncols() as f64);
        self.prefactor * (m / d).sqrt()
    }

    /// Hessian of the volumetric barrier: `A_x^T (3 Sigma_x - 2 P_x^(2)) A_x`.
    pub fn volumetric_hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        let st = slack_state(&self.a, &self.b, x)?;
        let p = projection(&st.a_x);
        let m = p.nrows();
        let mut mid = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                mid[(i, j)] = -2.0 * p[(i, j)] * p[(i, j)];
            }
            mid[(i, i)] += 3.0 * p[(i, i)];
        }
        Ok(st.a_x.transpose() * mid * &st.a_x)
    }
}

/// Vaidya metric value at `x` with explicit prefactor `c`:
/// `c sqrt(m/d) A_x^T (Sigma_x + (d/m) I) A_x`.
pub fn vaidya_metric(a: &DMatrix<f64>, b: &DVector<f64>, x: &Point, prefactor: f64) -> Result<DMatrix<f64>> {
    if a.nrows() < a.ncols() {
        return Err(Error::Shape(format!(
            "Vaidya metric needs m >= d, got m = {}, d = {}",
            a.nrows(),
            a.ncols()
        )));
    }
    let st = slack_state(a, b, x)?;
    let (m, d) = (a.nrows() as f64, a.ncols() as f64);
    let sigma = leverage_scores(&st.a_x).sigma;
    let mut scaled = st.a_x.clone();
    for i in 0..scaled.nrows() {
        let f = sigma[i] + d / m;
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= f;
        }
    }
    Ok(prefactor * (m / d).sqrt() * st.a_x.transpose() * scaled)
}

impl Metric for VaidyaMetric {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn amenability(&self) -> Amenability {
        let (m, d) = (self.a.nrows() as f64, self.a.ncols() as f64);
        // tr(D_x) = c sqrt(m/d) (sum sigma + d) = 2 c sqrt(md); the chord
        // bound K cap (2x - K) in D^sqrt(tr D) makes this the recorded
        // symmetry parameter.
        let nu = 2.0 * self.prefactor * (m * d).sqrt();
        Amenability::new(nu, nu, self.scale()).with_flags(Cert::Holds, Cert::Holds, Cert::Holds)
    }

    fn value(&self, x: &Point) -> Result<DMatrix<f64>> {
        vaidya_metric(&self.a, &self.b, x, self.prefactor)
    }

    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        let st = slack_state(&self.a, &self.b, x)?;
        let (m, d) = (self.a.nrows() as f64, self.a.ncols() as f64);
        let sigma = leverage_scores(&st.a_x).sigma;
        let s_xh = &st.a_x * h;
        let p = projection(&st.a_x);
        let dsigma = -2.0 * (lambda_from_projection(&p) * &s_xh);
        // D(A_x^T D_x A_x)[h] = -2 A_x^T S_{x,h} D_x A_x + A_x^T D_x' A_x
        let mut mid = DMatrix::zeros(s_xh.len(), s_xh.len());
        for i in 0..s_xh.len() {
            mid[(i, i)] = -2.0 * s_xh[i] * (sigma[i] + d / m) + dsigma[i];
        }
        Ok(self.scale() * st.a_x.transpose() * mid * &st.a_x)
    }

    fn barrier(&self, x: &Point) -> f64 {
        let slack = &self.a * x - &self.b;
        if slack.iter().any(|s| *s <= 0.0) {
            return f64::INFINITY;
        }
        let st = slack_state(&self.a, &self.b, x).expect("slacks checked positive");
        let gram = st.a_x.transpose() * &st.a_x;
        let (m, d) = (self.a.nrows() as f64, self.a.ncols() as f64);
        let log_det = match nalgebra::Cholesky::new(gram) {
            Some(c) => 2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
            None => return f64::INFINITY,
        };
        let phi_log: f64 = -slack.iter().map(|s| s.ln()).sum::<f64>();
        self.prefactor * (m / d).sqrt() * (0.5 * log_det + d / m * phi_log)
    }

    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>> {
        let st = slack_state(&self.a, &self.b, x)?;
        let (m, d) = (self.a.nrows() as f64, self.a.ncols() as f64);
        let sigma = leverage_scores(&st.a_x).sigma;
        let ones = DVector::from_element(st.a_x.nrows(), 1.0);
        let grad_vol = -(st.a_x.transpose() * sigma);
        let grad_log = -(st.a_x.transpose() * ones);
        Ok(self.prefactor * (m / d).sqrt() * (grad_vol + d / m * grad_log))
    }
}

// ---------------------------------------------------------------------------
// Lewis weights
// ---------------------------------------------------------------------------

/// `ell_p` Lewis weights of a matrix, with the residual of the defining
/// fixed-point equation at return time.
#[derive(Clone, Debug)]
pub struct LewisWeights {
    pub w: DVector<f64>,
    pub p: f64,
    pub residual: f64,
}

/// Default exponent `p = 2 ceil(log2 m)`.
pub fn default_lewis_p(m: usize) -> f64 {
    2.0 * (m.max(2) as f64).log2().ceil()
}

/// Solves the implicit equation `w = sigma(W^{1/2-1/p} M)` by the damped
/// fixed-point iteration `w <- (1-eta) w + eta sigma(W^{1/2-1/p} M)` with
/// `eta = min(1, 4/p)`, started from `w = (d/m) 1`.
///
/// The update uses the sigma form `w^{1-2/p} q` rather than the solved form
/// `q^{p/2}` (`q_i = a_i^T (M^T W^{1-2/p} M)^{-1} a_i`): the solved form
/// falls into period-2 cycles already at `p = 4`, while the sigma form is
/// the classical convergent Lewis iteration. Both have the same fixed point
/// and convergence is certified by the returned residual either way.
pub fn lewis_weights(m: &DMatrix<f64>, p: f64, tol: f64, max_iter: usize) -> Result<LewisWeights> {
    if p < 2.0 {
        return Err(Error::Shape(format!("Lewis weights need p >= 2, got {p}")));
    }
    let (rows, d) = (m.nrows(), m.ncols());
    if rows < d {
        return Err(Error::Shape(format!("Lewis weights need m >= d, got m = {rows}, d = {d}")));
    }
    let eta = (4.0 / p).min(1.0);
    let mut w = DVector::from_element(rows, d as f64 / rows as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let exponent = 0.5 - 1.0 / p;
        let mut weighted = m.clone();
        for i in 0..rows {
            let f = w[i].powf(exponent);
            for j in 0..d {
                weighted[(i, j)] *= f;
            }
        }
        let gram = weighted.transpose() * &weighted;
        let ginv = pd_inverse(&gram)?;
        // sigma_i(W^{1/2-1/p} M) = w_i^{1-2/p} q_i for q_i = a_i^T G^{-1} a_i.
        let mut next = DVector::zeros(rows);
        residual = 0.0;
        for i in 0..rows {
            let row = m.row(i).transpose();
            let q = (&ginv * &row).dot(&row).max(0.0);
            let sigma_i = w[i].powf(1.0 - 2.0 / p) * q;
            residual = residual.max((w[i] - sigma_i).abs());
            next[i] = sigma_i;
        }
        if residual <= tol {
            return Ok(LewisWeights { w, p, residual });
        }
        w = (1.0 - eta) * w + eta * next;
    }
    Err(Error::Convergence { iters: max_iter, residual })
}

/// Directional derivative of the Lewis weights of `A_x`:
/// `w' = -W^{1/2} N_x W^{1/2} s_{x,h}` with `N_x = 2 LambdaBar (I - c_p LambdaBar)^{-1}`.
pub fn d_lewis_weights(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &Point,
    p: f64,
    h: &Direction,
) -> Result<DVector<f64>> {
    let st = slack_state(a, b, x)?;
    let lw = lewis_weights(&st.a_x, p, 1e-12, 4000)?;
    let rows = st.a_x.nrows();
    // Projection of the reweighted matrix B = W^{1/2-1/p} A_x; diag(P_B) = w.
    let mut weighted = st.a_x.clone();
    for i in 0..rows {
        let f = lw.w[i].powf(0.5 - 1.0 / p);
        for j in 0..weighted.ncols() {
            weighted[(i, j)] *= f;
        }
    }
    let pb = projection(&weighted);
    // LambdaBar = I - W^{-1/2} P_B^(2) W^{-1/2}
    let mut lambda_bar = DMatrix::zeros(rows, rows);
    for i in 0..rows {
        for j in 0..rows {
            lambda_bar[(i, j)] = -pb[(i, j)] * pb[(i, j)] / (lw.w[i].sqrt() * lw.w[j].sqrt());
        }
        lambda_bar[(i, i)] += 1.0;
    }
    let c_p = 1.0 - 2.0 / p;
    let resolvent = (DMatrix::identity(rows, rows) - c_p * &lambda_bar)
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Factorization("I - c_p LambdaBar is singular".into()))?;
    let n_x = 2.0 * lambda_bar * resolvent;
    let s_xh = &st.a_x * h;
    let mut rhs = s_xh.clone();
    for i in 0..rows {
        rhs[i] *= lw.w[i].sqrt();
    }
    let mut out = n_x * rhs;
    for i in 0..rows {
        out[i] *= -lw.w[i].sqrt();
    }
    Ok(out)
}

/// Lewis-weight metric `c A_x^T W_x A_x`. The shipped constant is
/// `c = sqrt(d)` (the `sqrt(d)` factor the SLTSC/SASC lemmas require, with
/// `c1 = 1`, `c2 = 0` for the unpinned logarithmic factors).
#[derive(Clone, Debug)]
pub struct LewisMetric {
    a: DMatrix<f64>,
    b: DVector<f64>,
    p: f64,
    constant: f64,
    tol: f64,
    max_iter: usize,
}

impl LewisMetric {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let p = default_lewis_p(a.nrows());
        let c = (a.ncols() as f64).sqrt();
        Self::with_options(a, b, p, c, 1e-10, 4000)
    }

    pub fn with_options(
        a: DMatrix<f64>,
        b: DVector<f64>,
        p: f64,
        constant: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        if a.nrows() < a.ncols() {
            return Err(Error::Shape(format!(
                "Lewis metric needs m >= d, got m = {}, d = {}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() != b.len() {
            return Err(Error::Dimension("A and b row counts differ".into()));
        }
        Ok(Self { a, b, p, constant, tol, max_iter })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn weights_at(&self, x: &Point) -> Result<(SlackState, LewisWeights)> {
        let st = slack_state(&self.a, &self.b, x)?;
        let lw = lewis_weights(&st.a_x, self.p, self.tol, self.max_iter)?;
        Ok((st, lw))
    }
}

/// Lewis metric value `c A_x^T W_x A_x` with an explicit constant.
pub fn lewis_metric(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &Point,
    p: f64,
    constant: f64,
) -> Result<DMatrix<f64>> {
    let st = slack_state(a, b, x)?;
    let lw = lewis_weights(&st.a_x, p, 1e-10, 4000)?;
    let mut scaled = st.a_x.clone();
    for i in 0..scaled.nrows() {
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= lw.w[i];
        }
    }
    Ok(constant * st.a_x.transpose() * scaled)
}

impl Metric for LewisMetric {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn amenability(&self) -> Amenability {
        // tr(c W_x) = c d exactly, which is the chord-bound symmetry
        // parameter; logarithmic factors in m are dropped (see module docs).
        let nu = self.constant * self.a.ncols() as f64;
        Amenability::new(nu, nu, self.constant).with_flags(Cert::Holds, Cert::Holds, Cert::Holds)
    }

    fn value(&self, x: &Point) -> Result<DMatrix<f64>> {
        lewis_metric(&self.a, &self.b, x, self.p, self.constant)
    }

    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        let (st, lw) = self.weights_at(x)?;
        let s_xh = &st.a_x * h;
        let dw = d_lewis_weights(&self.a, &self.b, x, self.p, h)?;
        let m = st.a_x.nrows();
        let mut mid = DMatrix::zeros(m, m);
        for i in 0..m {
            mid[(i, i)] = -2.0 * s_xh[i] * lw.w[i] + dw[i];
        }
        Ok(self.constant * st.a_x.transpose() * mid * &st.a_x)
    }

    fn barrier(&self, x: &Point) -> f64 {
        let slack = &self.a * x - &self.b;
        if slack.iter().any(|s| *s <= 0.0) {
            return f64::INFINITY;
        }
        let (st, lw) = match self.weights_at(x) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        // phi_Lw = log det(A_x^T W^{1-2/p} A_x)
        let mut weighted = st.a_x.clone();
        for i in 0..weighted.nrows() {
            let f = lw.w[i].powf(0.5 - 1.0 / self.p);
            for j in 0..weighted.ncols() {
                weighted[(i, j)] *= f;
            }
        }
        let gram = weighted.transpose() * &weighted;
        match nalgebra::Cholesky::new(gram) {
            Some(c) => self.constant * 2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
            None => f64::INFINITY,
        }
    }

    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>> {
        // grad of log det(A_x^T W^{1-2/p} A_x) is -2 A_x^T w_x: the Lewis
        // weights sum to d identically, so the W-derivative term vanishes.
        let (st, lw) = self.weights_at(x)?;
        Ok(self.constant * -2.0 * (st.a_x.transpose() * lw.w))
    }
}
