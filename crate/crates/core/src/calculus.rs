//! Composition of metrics: scaling, embedding into an augmented space,
//! summation with the part-count prefactor, and direct products.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metric::{Amenability, Cert, DensePoint, Metric, MetricPoint};
use crate::model::{Direction, Point};

fn meet(a: Cert, b: Cert) -> Cert {
    use Cert::*;
    match (a, b) {
        (Holds, Holds) => Holds,
        (Unverified, _) | (_, Unverified) => Unverified,
        _ => AfterScaling,
    }
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// `c * g` with `c >= 1`: evaluators, barrier and parameters all scale by `c`;
/// property flags are preserved.
#[derive(Clone)]
pub struct ScaledMetric {
    inner: Box<dyn Metric>,
    c: f64,
}

/// Scales a metric by `c >= 1`.
pub fn scale(inner: Box<dyn Metric>, c: f64) -> Result<ScaledMetric> {
    if !(c >= 1.0) {
        return Err(Error::InvalidScale(c));
    }
    Ok(ScaledMetric { inner, c })
}

impl Metric for ScaledMetric {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn amenability(&self) -> Amenability {
        let a = self.inner.amenability();
        Amenability {
            nu: self.c * a.nu,
            nu_bar: self.c * a.nu_bar,
            applied_scaling: self.c * a.applied_scaling,
            ..a
        }
    }

    fn value(&self, x: &Point) -> Result<DMatrix<f64>> {
        Ok(self.c * self.inner.value(x)?)
    }

    fn deriv(&self, x: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        Ok(self.c * self.inner.deriv(x, h)?)
    }

    fn second_deriv(&self, x: &Point, h: &Direction) -> Option<Result<DMatrix<f64>>> {
        self.inner.second_deriv(x, h).map(|r| r.map(|m| self.c * m))
    }

    fn barrier(&self, x: &Point) -> f64 {
        self.c * self.inner.barrier(x)
    }

    fn barrier_grad(&self, x: &Point) -> Result<DVector<f64>> {
        Ok(self.c * self.inner.barrier_grad(x)?)
    }
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

/// Embedding `gbar(y) = P^T g(Py) P` of a metric onto selected coordinates of
/// a larger ambient space; `(nu, nu_bar)` and the property flags carry over.
#[derive(Clone)]
pub struct EmbeddedMetric {
    inner: Box<dyn Metric>,
    coords: Vec<usize>,
    ambient: usize,
}

/// Embeds a metric into `ambient` dimensions along the given coordinates.
pub fn embed(inner: Box<dyn Metric>, coords: Vec<usize>, ambient: usize) -> Result<EmbeddedMetric> {
    if coords.len() != inner.dim() {
        return Err(Error::Dimension(format!(
            "metric has dimension {} but {} coordinates were given",
            inner.dim(),
            coords.len()
        )));
    }
    let mut seen = vec![false; ambient];
    for &c in &coords {
        if c >= ambient {
            return Err(Error::Dimension(format!("coordinate {c} out of range (ambient {ambient})")));
        }
        if seen[c] {
            return Err(Error::Dimension(format!("coordinate {c} repeated")));
        }
        seen[c] = true;
    }
    Ok(EmbeddedMetric { inner, coords, ambient })
}

impl EmbeddedMetric {
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    fn project(&self, y: &Point) -> Result<Point> {
        if y.len() != self.ambient {
            return Err(Error::Dimension(format!(
                "expected ambient dimension {}, got {}",
                self.ambient,
                y.len()
            )));
        }
        Ok(DVector::from_fn(self.coords.len(), |i, _| y[self.coords[i]]))
    }

    fn scatter_matrix(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.ambient, self.ambient);
        for (bi, &i) in self.coords.iter().enumerate() {
            for (bj, &j) in self.coords.iter().enumerate() {
                out[(i, j)] = block[(bi, bj)];
            }
        }
        out
    }
}

impl Metric for EmbeddedMetric {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.ambient
    }

    fn amenability(&self) -> Amenability {
        self.inner.amenability()
    }

    fn value(&self, y: &Point) -> Result<DMatrix<f64>> {
        let x = self.project(y)?;
        Ok(self.scatter_matrix(&self.inner.value(&x)?))
    }

    fn deriv(&self, y: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        let x = self.project(y)?;
        let hp = self.project(h)?;
        Ok(self.scatter_matrix(&self.inner.deriv(&x, &hp)?))
    }

    fn second_deriv(&self, y: &Point, h: &Direction) -> Option<Result<DMatrix<f64>>> {
        let x = match self.project(y) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let hp = match self.project(h) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        self.inner
            .second_deriv(&x, &hp)
            .map(|r| r.map(|m| self.scatter_matrix(&m)))
    }

    fn barrier(&self, y: &Point) -> f64 {
        match self.project(y) {
            Ok(x) => self.inner.barrier(&x),
            Err(_) => f64::INFINITY,
        }
    }

    fn barrier_grad(&self, y: &Point) -> Result<DVector<f64>> {
        let x = self.project(y)?;
        let g = self.inner.barrier_grad(&x)?;
        let mut out = DVector::zeros(self.ambient);
        for (bi, &i) in self.coords.iter().enumerate() {
            out[i] = g[bi];
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Summation
// ---------------------------------------------------------------------------

/// Sum of embedded metrics with the part-count prefactor:
/// `g(y) = k * sum_i gbar_i(y)`, `(nu, nu_bar) = (k sum nu_i, k sum nu_bar_i)`.
///
/// Positive definiteness is verified lazily at the first prepared point; a
/// singular sum means some ambient direction is covered by no part, i.e. the
/// feasible set contains a straight line.
#[derive(Clone)]
pub struct CompositeMetric {
    parts: Vec<Box<dyn Metric>>,
    prefactor: f64,
    ambient: usize,
}

/// Sums metrics that already share one ambient space (prefactor = part count).
pub fn sum(parts: Vec<Box<dyn Metric>>) -> Result<CompositeMetric> {
    if parts.is_empty() {
        return Err(Error::MissingParameter("sum of metrics needs at least one part".into()));
    }
    let ambient = parts[0].dim();
    for (i, p) in parts.iter().enumerate() {
        if p.dim() != ambient {
            return Err(Error::Dimension(format!(
                "part {i} has ambient dimension {} != {ambient}",
                p.dim()
            )));
        }
    }
    let prefactor = parts.len() as f64;
    Ok(CompositeMetric { parts, prefactor, ambient })
}

/// Block-diagonal direct product: each part is scaled by its own block
/// dimension and embedded; no part-count prefactor is applied.
pub fn direct_product(parts: Vec<(Box<dyn Metric>, Vec<usize>)>) -> Result<CompositeMetric> {
    if parts.is_empty() {
        return Err(Error::MissingParameter("direct product needs at least one part".into()));
    }
    let ambient: usize = parts.iter().map(|(p, _)| p.dim()).sum();
    let mut covered = vec![false; ambient];
    let mut embedded: Vec<Box<dyn Metric>> = Vec::with_capacity(parts.len());
    for (part, coords) in parts {
        for &c in &coords {
            if c >= ambient || covered[c] {
                return Err(Error::Dimension(format!(
                    "block coordinate {c} overlaps or exceeds ambient {ambient}"
                )));
            }
            covered[c] = true;
        }
        let di = part.dim() as f64;
        let scaled = scale(part, di.max(1.0))?;
        embedded.push(Box::new(embed(Box::new(scaled), coords, ambient)?));
    }
    if !covered.iter().all(|c| *c) {
        return Err(Error::Dimension("blocks do not partition the ambient coordinates".into()));
    }
    Ok(CompositeMetric { parts: embedded, prefactor: 1.0, ambient })
}

impl CompositeMetric {
    pub fn parts(&self) -> &[Box<dyn Metric>] {
        &self.parts
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }
}

impl Metric for CompositeMetric {
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }

    fn dim(&self) -> usize {
        self.ambient
    }

    fn amenability(&self) -> Amenability {
        let mut nu = 0.0;
        let mut nu_bar = 0.0;
        let mut ssc = Cert::Holds;
        let mut sltsc = Cert::Holds;
        let mut sasc = Cert::Holds;
        for p in &self.parts {
            let a = p.amenability();
            nu += a.nu;
            nu_bar += a.nu_bar;
            ssc = meet(ssc, a.ssc);
            sltsc = meet(sltsc, a.sltsc);
            sasc = meet(sasc, a.sasc);
        }
        Amenability::new(self.prefactor * nu, self.prefactor * nu_bar, self.prefactor)
            .with_flags(ssc, sltsc, sasc)
    }

    fn value(&self, y: &Point) -> Result<DMatrix<f64>> {
        let mut g = DMatrix::zeros(self.ambient, self.ambient);
        for p in &self.parts {
            g += p.value(y)?;
        }
        Ok(self.prefactor * g)
    }

    fn deriv(&self, y: &Point, h: &Direction) -> Result<DMatrix<f64>> {
        let mut g = DMatrix::zeros(self.ambient, self.ambient);
        for p in &self.parts {
            g += p.deriv(y, h)?;
        }
        Ok(self.prefactor * g)
    }

    fn second_deriv(&self, y: &Point, h: &Direction) -> Option<Result<DMatrix<f64>>> {
        let mut g = DMatrix::zeros(self.ambient, self.ambient);
        for p in &self.parts {
            match p.second_deriv(y, h)? {
                Ok(m) => g += m,
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(self.prefactor * g))
    }

    fn barrier(&self, y: &Point) -> f64 {
        let mut phi = 0.0;
        for p in &self.parts {
            let v = p.barrier(y);
            if !v.is_finite() {
                return f64::INFINITY;
            }
            phi += v;
        }
        self.prefactor * phi
    }

    fn barrier_grad(&self, y: &Point) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(self.ambient);
        for p in &self.parts {
            g += p.barrier_grad(y)?;
        }
        Ok(self.prefactor * g)
    }

    fn prepare(&self, y: &Point) -> Result<Box<dyn MetricPoint>> {
        let g = self.value(y)?;
        match DensePoint::new(g) {
            Ok(p) => Ok(Box::new(p)),
            Err(_) => Err(Error::SingularMetric(
                "sum is not positive definite at an interior point; by the straight-line criterion \
                 some direction is unconstrained by every part"
                    .into(),
            )),
        }
    }
}
