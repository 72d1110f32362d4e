//! The log-determinant barrier on the PSD cone: svec/vec transfer operators,
//! explicit Hessian and inverse-Hessian formulas, and the rank-one-update
//! fast path for truncated PSD cones (inverse application, Gaussian sampling
//! without a full inverse, and the determinant-lemma recursion).

use std::cell::Cell;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::metric::{Amenability, Cert, DensePoint, Metric, MetricPoint};
use crate::model::{Direction, Point};

/// Coordinate transfer between `S^n` (symmetric `n x n` matrices) and
/// `R^{d_s}` with `d_s = n(n+1)/2`, via plain lower-triangle stacking
/// (no sqrt(2) weighting).
#[derive(Clone, Copy, Debug)]
pub struct SvecCodec {
    n: usize,
}

impl SvecCodec {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Number of free coordinates `n(n+1)/2`.
    pub fn dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// svec index of the (i, j) entry with i >= j, column-stacked.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i < self.n);
        j * self.n - j * (j + 1) / 2 + i
    }

    /// Lower-triangle stacking of a symmetric matrix.
    pub fn svec(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for j in 0..self.n {
            for i in j..self.n {
                v[self.index(i, j)] = x[(i, j)];
            }
        }
        v
    }

    /// Inverse of `svec`: rebuilds the symmetric matrix.
    pub fn smat(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for i in j..self.n {
                let val = v[self.index(i, j)];
                x[(i, j)] = val;
                x[(j, i)] = val;
            }
        }
        x
    }

    /// `M^T vec(A)` without materializing `M`: entry (i,j) is `A_ii` on the
    /// diagonal and `A_ij + A_ji` off it.
    pub fn mt_vec(&self, a: &DMatrix<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for j in 0..self.n {
            for i in j..self.n {
                v[self.index(i, j)] = if i == j { a[(i, i)] } else { a[(i, j)] + a[(j, i)] };
            }
        }
        v
    }

    /// The operator `M : R^{d_s} -> R^{n^2}` with `M o svec = vec`.
    pub fn m_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n * self.n, self.dim());
        for j in 0..self.n {
            for i in j..self.n {
                let col = self.index(i, j);
                m[(i + j * self.n, col)] = 1.0;
                if i != j {
                    m[(j + i * self.n, col)] = 1.0;
                }
            }
        }
        m
    }

    /// The symmetrizer `N : vec(A) -> vec((A + A^T)/2)`.
    pub fn n_matrix(&self) -> DMatrix<f64> {
        let n2 = self.n * self.n;
        let mut m = DMatrix::zeros(n2, n2);
        for i in 0..self.n {
            for j in 0..self.n {
                let row = i + j * self.n;
                m[(row, i + j * self.n)] += 0.5;
                m[(row, j + i * self.n)] += 0.5;
            }
        }
        m
    }

    /// The operator `L : vec(A) -> svec(A)` picking lower-triangle entries.
    pub fn l_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.n * self.n);
        for j in 0..self.n {
            for i in j..self.n {
                m[(self.index(i, j), i + j * self.n)] = 1.0;
            }
        }
        m
    }
}

/// `-log det X` if X is PD, `+inf` otherwise.
pub fn logdet_barrier_value(x: &DMatrix<f64>) -> f64 {
    match Cholesky::new(symmetrize(x)) {
        Some(c) => -2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => f64::INFINITY,
    }
}

fn pd_log_det(x: &DMatrix<f64>) -> Result<f64> {
    Cholesky::new(symmetrize(x))
        .map(|c| 2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
        .ok_or_else(|| Error::NotInterior("matrix is not positive definite".into()))
}

fn pd_inverse_of(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(symmetrize(x))
        .map(|c| c.inverse())
        .ok_or_else(|| Error::NotInterior("matrix is not positive definite".into()))
}

/// Hessian of the log-det barrier in svec coordinates, times `scaling`:
/// `scaling * M^T (X^{-1} (x) X^{-1}) M`.
pub fn psd_hessian(x: &DMatrix<f64>, scaling: f64) -> Result<DMatrix<f64>> {
    let codec = SvecCodec::new(x.nrows());
    let y = pd_inverse_of(x)?;
    let m = codec.m_matrix();
    Ok(scaling * m.transpose() * y.kronecker(&y) * m)
}

/// Inverse Hessian in svec coordinates, divided by `scaling`:
/// `(1/scaling) * L N (X (x) X) N L^T`.
pub fn psd_hessian_inverse(x: &DMatrix<f64>, scaling: f64) -> Result<DMatrix<f64>> {
    let codec = SvecCodec::new(x.nrows());
    if Cholesky::new(symmetrize(x)).is_none() {
        return Err(Error::Factorization("X is not positive definite".into()));
    }
    let l = codec.l_matrix();
    let nmat = codec.n_matrix();
    Ok((&l * &nmat) * x.kronecker(x) * (nmat.transpose() * l.transpose()) / scaling)
}

/// Applies the unscaled inverse Hessian to a vector without materializing it:
/// `z = L N vec(X Wbar X)` for `Wbar` the symmetrization of `unvec(L^T v)`.
pub fn apply_psd_hessian_inverse(codec: &SvecCodec, x: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = codec.side();
    // unvec(L^T v) is lower triangular with the entries of v
    let mut wbar = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let val = v[codec.index(i, j)];
            if i == j {
                wbar[(i, i)] = val;
            } else {
                wbar[(i, j)] = 0.5 * val;
                wbar[(j, i)] = 0.5 * val;
            }
        }
    }
    let z = x * wbar * x;
    codec.svec(&z)
}

/// log det of the unscaled Hessian: `2^{n(n-1)/2} (det X)^{-(n+1)}`.
pub fn psd_hessian_log_det(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows() as f64;
    let log_det_x = pd_log_det(x)?;
    Ok(0.5 * n * (n - 1.0) * std::f64::consts::LN_2 - (n + 1.0) * log_det_x)
}

// ---------------------------------------------------------------------------
// Log-det barrier as a Metric over svec coordinates
// ---------------------------------------------------------------------------

/// The log-det barrier metric `scaling * hess(-log det)` over `R^{d_s}`.
///
/// SSC holds from scaling `n` on; SASC needs the full `d_s = n(n+1)/2`
/// scaling (only ASC is available at `n`), so the barrier defaults to `n`
/// standalone and `d_s` when combined with other metrics.
#[derive(Clone, Debug)]
pub struct LogDetBarrier {
    codec: SvecCodec,
    scaling: f64,
}

impl LogDetBarrier {
    /// Standalone default: scaling `n`.
    pub fn standalone(n: usize) -> Self {
        Self { codec: SvecCodec::new(n), scaling: n as f64 }
    }

    /// Combination default: scaling `n(n+1)/2`.
    pub fn combined(n: usize) -> Self {
        let codec = SvecCodec::new(n);
        Self { codec, scaling: codec.dim() as f64 }
    }

    pub fn with_scaling(n: usize, scaling: f64) -> Self {
        Self { codec: SvecCodec::new(n), scaling }
    }

    pub fn codec(&self) -> &SvecCodec {
        &self.codec
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    fn mat(&self, x: &Point) -> Result<DMatrix<f64>> {
        if x.len() != self.codec.dim() {
            return Err(Error::Dimension(format!(
                "expected {} svec coordinates, got {}",
                self.codec.dim(),
                x.len()
            )));
        }
        Ok(self.codec.smat(x))
    }
}

impl Metric for LogDetBarrier {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.codec.dim()
    }

    fn amenability(&self) -> Amenability {
        let n = self.codec.side() as f64;
        let ds = self.codec.dim() as f64;
        // -log det is n-symmetric, so nu = nu_bar = scaling * n.
        let sasc = if self.scaling >= ds { Cert::Holds } else { Cert::AfterScaling };
        let ssc = if self.scaling >= n { Cert::Holds } else { Cert::AfterScaling };
        Amenability::new(self.scaling * n, self.scaling * n, self.scaling)
            .with_flags(ssc, Cert::Holds, sasc)
    }

    fn value(&self, x: &Point) -> Result<DMatrix<f64>> {
        psd_hessian(&self.mat(x)?, self.scaling)
    }

    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        let xm = self.mat(x)?;
        let hm = self.codec.smat(h);
        let y = pd_inverse_of(&xm)?;
        let yhy = &y * &hm * &y;
        let m = self.codec.m_matrix();
        let kron = yhy.kronecker(&y) + y.kronecker(&yhy);
        Ok(-self.scaling * m.transpose() * kron * m)
    }

    fn second_deriv(&self, x: &Point, h: &Direction) -> Option<Result<DMatrix<f64>>> {
        let xm = match self.mat(x) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let hm = self.codec.smat(h);
        let y = match pd_inverse_of(&xm) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let yhy = &y * &hm * &y;
        let yhyhy = &yhy * &hm * &y;
        let m = self.codec.m_matrix();
        let kron = 2.0 * yhyhy.kronecker(&y) + 2.0 * yhy.kronecker(&yhy) + 2.0 * y.kronecker(&yhyhy);
        Some(Ok(self.scaling * m.transpose() * kron * m))
    }

    fn barrier(&self, x: &Point) -> f64 {
        match self.mat(x) {
            Ok(xm) => self.scaling * logdet_barrier_value(&xm),
            Err(_) => f64::INFINITY,
        }
    }

    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>> {
        let xm = self.mat(x)?;
        let y = pd_inverse_of(&xm)?;
        Ok(-self.scaling * self.codec.mt_vec(&y))
    }
}

// ---------------------------------------------------------------------------
// Truncated PSD cone with the rank-one fast path
// ---------------------------------------------------------------------------

/// Metric for the truncated PSD cone
/// `{X > 0, <A_i, X> >= b_i}` in svec coordinates:
/// `g = k (psd_scale * hess phi_psd + M^T A^T S^{-2} A M)` where `k` is the
/// two-part prefactor (1 when there are no linear constraints).
///
/// `prepare` uses the rank-one update chain when `m <= d_s` and the dense
/// assembly otherwise.
#[derive(Clone)]
pub struct TruncatedPsdMetric {
    codec: SvecCodec,
    constraints: Vec<(DMatrix<f64>, f64)>,
    psd_scale: f64,
}

impl TruncatedPsdMetric {
    /// Constraints are pairs `(A_i, b_i)` meaning `<A_i, X> >= b_i`. The PSD
    /// block keeps the combination default `d_s` scaling.
    pub fn new(n: usize, constraints: Vec<(DMatrix<f64>, f64)>) -> Result<Self> {
        let codec = SvecCodec::new(n);
        Self::with_psd_scale(n, constraints, codec.dim() as f64)
    }

    pub fn with_psd_scale(n: usize, constraints: Vec<(DMatrix<f64>, f64)>, psd_scale: f64) -> Result<Self> {
        for (i, (a, _)) in constraints.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Dimension(format!("constraint {i} has wrong shape")));
            }
            if (a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
                return Err(Error::Shape(format!("constraint matrix {i} is not symmetric")));
            }
            if a.amax() == 0.0 {
                return Err(Error::Shape(format!("constraint matrix {i} is zero")));
            }
        }
        Ok(Self { codec: SvecCodec::new(n), constraints, psd_scale })
    }

    pub fn codec(&self) -> &SvecCodec {
        &self.codec
    }

    /// Two-part prefactor: 1 for the pure cone, 2 once linear constraints
    /// join the sum.
    pub fn prefactor(&self) -> f64 {
        if self.constraints.is_empty() {
            1.0
        } else {
            2.0
        }
    }

    fn slacks(&self, xm: &DMatrix<f64>) -> Result<DVector<f64>> {
        let mut s = DVector::zeros(self.constraints.len());
        for (i, (a, b)) in self.constraints.iter().enumerate() {
            let val = crate::linalg::frob_inner(a, xm) - b;
            if val <= 0.0 {
                return Err(Error::NotInterior(format!("linear slack {i} is {val} <= 0")));
            }
            s[i] = val;
        }
        Ok(s)
    }

    fn mat(&self, x: &Point) -> Result<DMatrix<f64>> {
        if x.len() != self.codec.dim() {
            return Err(Error::Dimension(format!(
                "expected {} svec coordinates, got {}",
                self.codec.dim(),
                x.len()
            )));
        }
        Ok(self.codec.smat(x))
    }

    /// Builds the per-point state with the rank-one chain (Algorithm for
    /// small m).
    pub fn prepare_fast(&self, x: &Point) -> Result<PsdPoint> {
        let xm = self.mat(x)?;
        let slack = self.slacks(&xm)?;
        let k = self.prefactor();
        let y = pd_inverse_of(&xm)?;
        let base_scale = k * self.psd_scale;
        let log_det_x = pd_log_det(&xm)?;
        let n = self.codec.side() as f64;
        let ds = self.codec.dim();
        // det(c * M^T (X^{-1} (x) X^{-1}) M) = c^{d_s} 2^{n(n-1)/2} det(X)^{-(n+1)}
        let mut log_det = ds as f64 * base_scale.ln() + 0.5 * n * (n - 1.0) * std::f64::consts::LN_2
            - (n + 1.0) * log_det_x;

        let m = self.constraints.len();
        let mut u_cols = Vec::with_capacity(m);
        for (i, (a, _)) in self.constraints.iter().enumerate() {
            u_cols.push(k.sqrt() / slack[i] * self.codec.mt_vec(a));
        }

        // Sherman-Morrison chain: v_i = gbar_{i-1}^{-1} u_i and the
        // determinant recursion det gbar_i = det gbar_{i-1} (1 + u_i^T v_i).
        let mut chain: Vec<(DVector<f64>, f64)> = Vec::with_capacity(m);
        for i in 0..m {
            let mut v = apply_psd_hessian_inverse(&self.codec, &xm, &u_cols[i]) / base_scale;
            for (w, inv_denom) in chain.iter() {
                let c = w.dot(&u_cols[i]) * inv_denom;
                v -= c * w;
            }
            let denom = 1.0 + u_cols[i].dot(&v);
            if denom <= 0.0 {
                return Err(Error::Factorization(format!(
                    "rank-one update {i} has non-positive pivot {denom}"
                )));
            }
            log_det += denom.ln();
            chain.push((v, 1.0 / denom));
        }

        let x_inv_sqrt = {
            let eig = symmetrize(&y).symmetric_eigen();
            let mut vals = eig.eigenvalues.clone();
            for v in vals.iter_mut() {
                *v = v.max(0.0).sqrt();
            }
            &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
        };

        Ok(PsdPoint {
            codec: self.codec,
            x: xm,
            y,
            x_inv_sqrt,
            base_scale,
            u_cols,
            chain,
            log_det,
            rank_one_ops: Cell::new(0),
        })
    }
}

impl Metric for TruncatedPsdMetric {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.codec.dim()
    }

    fn amenability(&self) -> Amenability {
        let n = self.codec.side() as f64;
        let m = self.constraints.len() as f64;
        let k = self.prefactor();
        let nu = k * (self.psd_scale * n + m);
        let ds = self.codec.dim() as f64;
        let sasc = if self.psd_scale >= ds { Cert::Holds } else { Cert::AfterScaling };
        Amenability::new(nu, nu, self.psd_scale).with_flags(Cert::Holds, Cert::Holds, sasc)
    }

    fn value(&self, x: &Point) -> Result<DMatrix<f64>> {
        let xm = self.mat(x)?;
        let slack = self.slacks(&xm)?;
        let k = self.prefactor();
        let mut g = psd_hessian(&xm, k * self.psd_scale)?;
        for (i, (a, _)) in self.constraints.iter().enumerate() {
            let u = k.sqrt() / slack[i] * self.codec.mt_vec(a);
            g += &u * u.transpose();
        }
        Ok(g)
    }

    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        let xm = self.mat(x)?;
        let hm = self.codec.smat(h);
        let slack = self.slacks(&xm)?;
        let k = self.prefactor();
        let y = pd_inverse_of(&xm)?;
        let yhy = &y * &hm * &y;
        let mmat = self.codec.m_matrix();
        let kron = yhy.kronecker(&y) + y.kronecker(&yhy);
        let mut d = -k * self.psd_scale * mmat.transpose() * kron * mmat;
        for (i, (a, _)) in self.constraints.iter().enumerate() {
            let sdot = crate::linalg::frob_inner(a, &hm);
            let u = self.codec.mt_vec(a) / slack[i];
            d -= 2.0 * k * sdot / slack[i] * (&u * u.transpose());
        }
        Ok(d)
    }

    fn barrier(&self, x: &Point) -> f64 {
        let xm = match self.mat(x) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let ld = logdet_barrier_value(&xm);
        if !ld.is_finite() {
            return f64::INFINITY;
        }
        let k = self.prefactor();
        let mut phi = self.psd_scale * ld;
        for (a, b) in &self.constraints {
            let s = crate::linalg::frob_inner(a, &xm) - b;
            if s <= 0.0 {
                return f64::INFINITY;
            }
            phi -= s.ln();
        }
        k * phi
    }

    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>> {
        let xm = self.mat(x)?;
        let slack = self.slacks(&xm)?;
        let y = pd_inverse_of(&xm)?;
        let k = self.prefactor();
        let mut grad = -self.psd_scale * self.codec.mt_vec(&y);
        for (i, (a, _)) in self.constraints.iter().enumerate() {
            grad -= self.codec.mt_vec(a) / slack[i];
        }
        Ok(k * grad)
    }

    fn prepare(&self, x: &Point) -> Result<Box<dyn MetricPoint>> {
        if self.constraints.len() <= self.codec.dim() {
            Ok(Box::new(self.prepare_fast(x)?))
        } else {
            Ok(Box::new(DensePoint::new(self.value(x)?)?))
        }
    }
}

/// Per-point state for the truncated PSD metric: the base inverse is applied
/// by reshaping, linear constraints enter through a Sherman-Morrison chain,
/// and the determinant is maintained by the matrix-determinant lemma.
pub struct PsdPoint {
    codec: SvecCodec,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    x_inv_sqrt: DMatrix<f64>,
    base_scale: f64,
    u_cols: Vec<DVector<f64>>,
    /// `(gbar_{i-1}^{-1} u_i, 1 / (1 + u_i^T gbar_{i-1}^{-1} u_i))`.
    chain: Vec<(DVector<f64>, f64)>,
    log_det: f64,
    rank_one_ops: Cell<usize>,
}

impl PsdPoint {
    /// Number of rank-one corrections applied so far (instrumentation).
    pub fn rank_one_ops(&self) -> usize {
        self.rank_one_ops.get()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }
}

impl MetricPoint for PsdPoint {
    fn dim(&self) -> usize {
        self.codec.dim()
    }

    fn log_det(&self) -> f64 {
        self.log_det
    }

    fn quad_form(&self, v: &DVector<f64>) -> f64 {
        // base part: base_scale * tr(X^{-1} V X^{-1} V), linear part via dots
        let vm = self.codec.smat(v);
        let yv = &self.y * vm;
        let mut q = self.base_scale * crate::linalg::frob_inner(&yv.transpose(), &yv);
        for u in &self.u_cols {
            let t = u.dot(v);
            q += t * t;
        }
        q
    }

    fn inv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut w = apply_psd_hessian_inverse(&self.codec, &self.x, v) / self.base_scale;
        for (i, (chain_v, inv_denom)) in self.chain.iter().enumerate() {
            let c = self.u_cols[i].dot(&w) * inv_denom;
            w -= c * chain_v;
            self.rank_one_ops.set(self.rank_one_ops.get() + 1);
        }
        w
    }

    fn draw(&self, scale: f64, rng: &mut dyn RngCore) -> DVector<f64> {
        // t = B w_b + U w_u with B B^T + U U^T = g, then g^{-1} t.
        let n = self.codec.side();
        let wb = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let base = &self.x_inv_sqrt * wb * &self.x_inv_sqrt;
        let mut t = self.base_scale.sqrt() * self.codec.mt_vec(&base);
        for u in &self.u_cols {
            let z: f64 = rng.sample(StandardNormal);
            t += z * u;
        }
        scale * self.inv_apply(&t)
    }
}

/// det g(Y) / det g(X) from two prepared states (the recursion already
/// folded the rank-one pivots into each log-determinant).
pub fn det_ratio(state_x: &PsdPoint, state_y: &PsdPoint) -> f64 {
    (state_y.log_det() - state_x.log_det()).exp()
}

/// Empirical entrywise variances of the GOE alignment diagnostic: with
/// `svec(H) ~ N(0, (r^2/d_s) g(X)^{-1})` for the n-scaled log-det metric,
/// the whitened matrix `sqrt(d_s n)/r X^{-1/2} H X^{-1/2}` should have
/// variance 1 on the diagonal and 1/2 off it.
///
/// Returns `(worst diagonal deviation, worst off-diagonal deviation)` in
/// Monte-Carlo standard errors.
pub fn goe_alignment(
    x: &DMatrix<f64>,
    r: f64,
    draws: usize,
    rng: &mut impl RngCore,
) -> Result<(f64, f64)> {
    let n = x.nrows();
    let codec = SvecCodec::new(n);
    let ds = codec.dim() as f64;
    let barrier = LogDetBarrier::standalone(n);
    let point = barrier.prepare(&codec.svec(x))?;
    let x_inv_sqrt = crate::linalg::sym_sqrt(&pd_inverse_of(x)?)?;
    let factor = (ds * n as f64).sqrt() / r;
    let mut acc = DMatrix::zeros(n, n);
    for _ in 0..draws {
        let h = codec.smat(&point.draw(r / ds.sqrt(), rng));
        let z = factor * &x_inv_sqrt * h * &x_inv_sqrt;
        for i in 0..n {
            for j in 0..n {
                acc[(i, j)] += z[(i, j)] * z[(i, j)];
            }
        }
    }
    acc /= draws as f64;
    // var of the sample variance of N(0, s^2) is 2 s^4 / N
    let se = (2.0 / draws as f64).sqrt();
    let mut worst_diag: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                worst_diag = worst_diag.max((acc[(i, j)] - 1.0).abs() / se);
            } else {
                worst_off = worst_off.max((acc[(i, j)] - 0.5).abs() / (0.5 * se));
            }
        }
    }
    Ok((worst_diag, worst_off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n)
    }

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        symmetrize(&a)
    }

    #[test]
    fn svec_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let codec = SvecCodec::new(4);
        let x = random_sym(4, &mut rng);
        let v = codec.svec(&x);
        assert_eq!(v.len(), 10);
        assert!((codec.smat(&v) - &x).amax() < 1e-15);
    }

    #[test]
    fn m_composes_svec_to_vec() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let codec = SvecCodec::new(3);
        let x = random_sym(3, &mut rng);
        let m = codec.m_matrix();
        let lhs = &m * codec.svec(&x);
        let mut vec_x = DVector::zeros(9);
        for j in 0..3 {
            for i in 0..3 {
                vec_x[i + 3 * j] = x[(i, j)];
            }
        }
        assert!((lhs - vec_x).amax() < 1e-15);
    }

    #[test]
    fn mnl_identities() {
        let codec = SvecCodec::new(3);
        let m = codec.m_matrix();
        let n = codec.n_matrix();
        let l = codec.l_matrix();
        assert!((&n * &n - &n).amax() < 1e-15, "N^2 = N");
        assert!((&n - n.transpose()).amax() < 1e-15, "N = N^T");
        assert!((&m * &l * &n - &n).amax() < 1e-15, "MLN = N");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let kron = a.kronecker(&a);
        assert!((&n * &kron - &kron * &n).amax() < 1e-12, "N commutes with A(x)A");
    }

    #[test]
    fn logdet_values() {
        assert_relative_eq!(logdet_barrier_value(&DMatrix::identity(3, 3)), 0.0);
        let x = DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 0.5]));
        assert_relative_eq!(logdet_barrier_value(&x), 0.0, epsilon = 1e-14);
        let x = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -0.5]));
        assert_eq!(logdet_barrier_value(&x), f64::INFINITY);
    }

    #[test]
    fn hessian_quadratic_form_is_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 5] {
            let codec = SvecCodec::new(n);
            let x = random_pd(n, &mut rng);
            let h = random_sym(n, &mut rng);
            let g = psd_hessian(&x, 1.0).unwrap();
            let hv = codec.svec(&h);
            let quad = (&g * &hv).dot(&hv);
            let y = pd_inverse_of(&x).unwrap();
            let tr = (&y * &h * &y * &h).trace();
            assert_relative_eq!(quad, tr, max_relative = 1e-10);
        }
    }

    #[test]
    fn frobenius_norm_at_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let codec = SvecCodec::new(3);
        let h = random_sym(3, &mut rng);
        let g = psd_hessian(&DMatrix::identity(3, 3), 1.0).unwrap();
        let hv = codec.svec(&h);
        assert_relative_eq!((&g * &hv).dot(&hv), h.norm_squared(), max_relative = 1e-12);
    }

    #[test]
    fn kronecker_determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            let codec = SvecCodec::new(n);
            let x = random_pd(n, &mut rng);
            let m = codec.m_matrix();
            let prod = m.transpose() * x.kronecker(&x) * &m;
            let det = prod.lu().determinant();
            let expect =
                2f64.powf(0.5 * n as f64 * (n as f64 - 1.0)) * x.clone().lu().determinant().powf(n as f64 + 1.0);
            assert_relative_eq!(det, expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn inverse_formula_and_identity_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [2, 4, 6] {
            let x = random_pd(n, &mut rng);
            let g = psd_hessian(&x, 1.0).unwrap();
            let ginv = psd_hessian_inverse(&x, 1.0).unwrap();
            let prod = &g * &ginv;
            let eye = DMatrix::identity(g.nrows(), g.ncols());
            assert!((prod - eye).amax() < 1e-8);
        }
        // LNL^T pattern at the identity: 1 on diagonal coords, 1/2 off
        let codec = SvecCodec::new(3);
        let ginv = psd_hessian_inverse(&DMatrix::identity(3, 3), 1.0).unwrap();
        for j in 0..3 {
            for i in j..3 {
                let idx = codec.index(i, j);
                let expect = if i == j { 1.0 } else { 0.5 };
                assert_relative_eq!(ginv[(idx, idx)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn fast_inverse_apply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 3, 5] {
            let codec = SvecCodec::new(n);
            let x = random_pd(n, &mut rng);
            let v = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let fast = apply_psd_hessian_inverse(&codec, &x, &v);
            let dense = psd_hessian_inverse(&x, 1.0).unwrap() * &v;
            assert!((fast - dense).amax() < 1e-10);
        }
    }

    #[test]
    fn logdet_metric_derivative_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let b = LogDetBarrier::standalone(3);
        let codec = *b.codec();
        let xm = random_pd(3, &mut rng);
        let x = codec.svec(&xm);
        let h = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let eps = 1e-6;
        let fd = (b.value(&(&x + eps * &h)).unwrap() - b.value(&(&x - eps * &h)).unwrap()) / (2.0 * eps);
        let an = b.deriv(&x, &h).unwrap();
        assert!((fd - &an).amax() / an.amax() < 1e-6);
        let fg = (b.barrier(&(&x + eps * &h)) - b.barrier(&(&x - eps * &h))) / (2.0 * eps);
        let ag = b.barrier_grad(&x).unwrap().dot(&h);
        assert_relative_eq!(fg, ag, max_relative = 1e-6);
    }

    #[test]
    fn logdet_hessian_logdet_identity() {
        // log det hess phi(X) = const - (n+1) log det X
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let x = random_pd(n, &mut rng);
        let g = psd_hessian(&x, 1.0).unwrap();
        let ld = g.cholesky().unwrap().l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum::<f64>();
        assert_relative_eq!(ld, psd_hessian_log_det(&x).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn symmetry_parameter_nu_bar() {
        // ||H||_X^2 <= n whenever ||X^{-1/2} H X^{-1/2}||_2 <= 1
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 4;
        for _ in 0..40 {
            let x = random_pd(n, &mut rng);
            let h0 = random_sym(n, &mut rng);
            let sqrt_x = crate::linalg::sym_sqrt(&x).unwrap();
            let y = pd_inverse_of(&x).unwrap();
            let sqrt_y = crate::linalg::sym_sqrt(&y).unwrap();
            let whitened = &sqrt_y * &h0 * &sqrt_y;
            let norm = crate::linalg::sym_spectral_radius(&whitened);
            // rescale so the whitened operator norm is exactly <= 1
            let h = &sqrt_x * (whitened / norm) * &sqrt_x;
            let local = (&y * &h * &y * &h).trace();
            assert!(local <= n as f64 + 1e-9, "||H||_X^2 = {local} > n");
        }
    }

    #[test]
    fn truncated_pure_cone_matches_hessian_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 3;
        let metric = TruncatedPsdMetric::new(n, vec![]).unwrap();
        let codec = *metric.codec();
        let xm = random_pd(n, &mut rng);
        let x = codec.svec(&xm);
        let g = metric.value(&x).unwrap();
        let expect = psd_hessian(&xm, metric.prefactor() * codec.dim() as f64).unwrap();
        assert!((g - expect).amax() < 1e-10);
        let pt = metric.prepare_fast(&x).unwrap();
        let dense = DensePoint::new(metric.value(&x).unwrap()).unwrap();
        assert_relative_eq!(pt.log_det(), dense.log_det(), max_relative = 1e-9);
    }

    #[test]
    fn sherman_morrison_single_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 3;
        let a1 = random_sym(n, &mut rng);
        let metric = TruncatedPsdMetric::new(n, vec![(a1, -5.0)]).unwrap();
        let codec = *metric.codec();
        let xm = random_pd(n, &mut rng);
        let x = codec.svec(&xm);
        let pt = metric.prepare_fast(&x).unwrap();
        let v = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let fast = pt.inv_apply(&v);
        let dense = DensePoint::new(metric.value(&x).unwrap()).unwrap().inv_apply(&v);
        let rel = (
            &fast - &dense).amax() / dense.amax().max(1.0);
        assert!(rel < 1e-6, "single Sherman-Morrison step off by {rel}");
    }

    #[test]
    fn chain_matches_dense_inverse_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for (n, m) in [(2usize, 3usize), (4, 6), (6, 10)] {
            let mut constraints = Vec::new();
            for _ in 0..m {
                constraints.push((random_sym(n, &mut rng), -4.0 - rng.gen_range(0.0..1.0)));
            }
            let metric = TruncatedPsdMetric::new(n, constraints).unwrap();
            let codec = *metric.codec();
            let xm = random_pd(n, &mut rng);
            let x = codec.svec(&xm);
            let pt = metric.prepare_fast(&x).unwrap();
            let dense = DensePoint::new(metric.value(&x).unwrap()).unwrap();
            assert!(
                (pt.log_det() - dense.log_det()).abs() / dense.log_det().abs().max(1.0) < 1e-6,
                "determinant recursion diverges from dense"
            );
            let v = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let fast = pt.inv_apply(&v);
            let slow = dense.inv_apply(&v);
            let rel = (&fast - &slow).amax() / slow.amax().max(1.0);
            assert!(rel < 1e-6, "inverse apply off by {rel}");
            // quad form and zero behavior
            assert_relative_eq!(pt.quad_form(&v), dense.quad_form(&v), max_relative = 1e-8);
            assert!(pt.inv_apply(&DVector::zeros(codec.dim())).amax() < 1e-15);
        }
    }

    #[test]
    fn inv_apply_costs_m_rank_one_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let n = 3;
        let m = 7;
        let mut constraints = Vec::new();
        for _ in 0..m {
            constraints.push((random_sym(n, &mut rng), -20.0));
        }
        let metric = TruncatedPsdMetric::new(n, constraints).unwrap();
        let codec = *metric.codec();
        let xm = random_pd(n, &mut rng);
        let pt = metric.prepare_fast(&codec.svec(&xm)).unwrap();
        let before = pt.rank_one_ops();
        let v = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let _ = pt.inv_apply(&v);
        assert_eq!(pt.rank_one_ops() - before, m);
    }

    #[test]
    fn det_ratio_closed_form_for_doubling() {
        // m = 0, Y = 2X: det g(Y)/det g(X) = (det Y / det X)^{-(n+1)} = 2^{-n(n+1)}
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 3;
        let metric = TruncatedPsdMetric::new(n, vec![]).unwrap();
        let codec = *metric.codec();
        let xm = random_pd(n, &mut rng);
        let sx = metric.prepare_fast(&codec.svec(&xm)).unwrap();
        let sy = metric.prepare_fast(&codec.svec(&(2.0 * &xm))).unwrap();
        let expect = 2f64.powi(-(n as i32) * (n as i32 + 1));
        assert_relative_eq!(det_ratio(&sx, &sy), expect, max_relative = 1e-9);
    }

    #[test]
    fn truncated_deriv_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let n = 3;
        let constraints = vec![(random_sym(n, &mut rng), -6.0), (DMatrix::identity(n, n), -7.0)];
        let metric = TruncatedPsdMetric::new(n, constraints).unwrap();
        let codec = *metric.codec();
        let xm = random_pd(n, &mut rng);
        let x = codec.svec(&xm);
        let h = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let eps = 1e-6;
        let fd = (metric.value(&(&x + eps * &h)).unwrap() - metric.value(&(&x - eps * &h)).unwrap())
            / (2.0 * eps);
        let an = metric.deriv(&x, &h).unwrap();
        assert!((fd - &an).amax() / an.amax() < 1e-5);
    }

    #[test]
    fn ssc_scaling_band() {
        // sup ||g^{-1/2} D(hess phi)[H] g^{-1/2}||_F / ||H||_X over sampled H
        // sits inside [sqrt(2(n+1)), 2 sqrt(n)] for the unscaled Hessian.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let n = 4;
        let b = LogDetBarrier::with_scaling(n, 1.0);
        let codec = *b.codec();
        let xm = random_pd(n, &mut rng);
        let x = codec.svec(&xm);
        let g = b.value(&x).unwrap();
        let g_chol = g.clone().cholesky().unwrap();
        let mut sup: f64 = 0.0;
        for _ in 0..200 {
            let h = DVector::from_fn(codec.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let d = b.deriv(&x, &h).unwrap();
            // g^{-1/2} D g^{-1/2} has the same Frobenius norm as L^{-1} D L^{-T}
            let li_d = g_chol.l_dirty().solve_lower_triangular(&d).unwrap();
            let li_d_lit = g_chol
                .l_dirty()
                .solve_lower_triangular(&li_d.transpose())
                .unwrap();
            let fro = li_d_lit.norm();
            let hx = (&g * &h).dot(&h).sqrt();
            sup = sup.max(fro / hx);
        }
        let lo = (2.0 * (n as f64 + 1.0)).sqrt();
        let hi = 2.0 * (n as f64).sqrt();
        assert!(sup <= hi * 1.05, "sup {sup} above 2 sqrt(n) = {hi}");
        assert!(sup >= lo * 0.6, "sampled sup {sup} implausibly far below {lo}");
    }

    #[test]
    fn goe_alignment_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_pd(3, &mut rng);
        let (diag_dev, off_dev) = goe_alignment(&x, 0.05, 40_000, &mut rng).unwrap();
        assert!(diag_dev < 5.0, "diagonal variance off by {diag_dev} SE");
        assert!(off_dev < 5.0, "off-diagonal variance off by {off_dev} SE");
    }
}
