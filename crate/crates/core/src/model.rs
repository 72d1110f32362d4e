//! Domain types shared by all modules: points, problem descriptions, and the
//! reduction from general structured problems to the exponential form the
//! sampler actually works on.
//!
//! A [`ProblemSpec`] is a target `exp(-sum_i f_i)` restricted to an
//! intersection of structured constraint sets. [`reduce`] replaces every
//! non-linear potential by an epigraph variable, producing a
//! [`ReducedProblem`] whose target is `exp(-c^T y)` with `c = (0,..,0,1,..,1)`
//! and whose constraints all carry catalog barriers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_min_eigenvalue;
use crate::linear::{LewisMetric, LogBarrier, VaidyaMetric};
use crate::metric::Metric;
use crate::psd::{LogDetBarrier, SvecCodec};
use crate::structured::{
    ellipsoid_barrier, entropy_barrier, exp_epigraph_barrier, gaussian_epigraph_barrier,
    log_epigraph_barrier, power_barrier, soc_barrier,
};

/// A point of the (possibly augmented) ambient space.
pub type Point = DVector<f64>;

/// A direction in the same space.
pub type Direction = DVector<f64>;

/// One structured constraint set.
#[derive(Clone, Debug)]
pub enum ConstraintTerm {
    /// `{x : Ax >= b}`; `A` must have no all-zero rows.
    Linear { a: DMatrix<f64>, b: DVector<f64> },
    /// `{x : x^T Q x / 2 + p^T x + l <= 0}` with `Q` PSD and nonzero.
    Ellipsoid { q: DMatrix<f64>, p: DVector<f64>, l: f64 },
    /// PSD cone on `side (side+1) / 2` contiguous svec coordinates starting
    /// at `offset`.
    PsdCone { side: usize, offset: usize },
}

impl ConstraintTerm {
    /// Strict interior membership.
    pub fn is_interior(&self, x: &Point) -> bool {
        match self {
            ConstraintTerm::Linear { a, b } => {
                let s = a * x - b;
                s.iter().all(|v| *v > 0.0)
            }
            ConstraintTerm::Ellipsoid { q, p, l } => {
                -l - p.dot(x) - 0.5 * (q * x).dot(x) > 0.0
            }
            ConstraintTerm::PsdCone { side, offset } => {
                let codec = SvecCodec::new(*side);
                if x.len() < offset + codec.dim() {
                    return false;
                }
                let block = DVector::from_fn(codec.dim(), |i, _| x[offset + i]);
                sym_min_eigenvalue(&codec.smat(&block)) > 0.0
            }
        }
    }
}

/// One additive potential term of the target `exp(-sum f_i)`.
#[derive(Clone, Debug)]
pub enum PotentialTerm {
    /// `c . x`
    Linear { c: DVector<f64> },
    /// `||x - mu||^2_Sigma / 2`
    Quadratic { sigma: DMatrix<f64>, mu: DVector<f64> },
    /// `||x - mu||_Sigma`
    Norm { sigma: DMatrix<f64>, mu: DVector<f64> },
    /// `sum_i x_i log x_i` on `x > 0`
    Entropy,
    /// `sum_i |x_i|^p`, `p >= 1`
    Power { p: f64 },
    /// `sum_i -log x_i` on `x > 0`
    Log,
    /// `sum_i e^{x_i}`
    Exp,
    /// `-log det X` on the PSD cone (must pair with a `PsdCone` constraint).
    LogDet { side: usize, offset: usize },
}

impl PotentialTerm {
    /// Value of the term at a point of the original `x`-space; `+inf`
    /// outside the term's domain.
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            PotentialTerm::Linear { c } => c.dot(x),
            PotentialTerm::Quadratic { sigma, mu } => {
                let diff = x - mu;
                0.5 * (sigma * &diff).dot(&diff)
            }
            PotentialTerm::Norm { sigma, mu } => {
                let diff = x - mu;
                (sigma * &diff).dot(&diff).max(0.0).sqrt()
            }
            PotentialTerm::Entropy => x
                .iter()
                .map(|&v| {
                    if v < 0.0 {
                        f64::INFINITY
                    } else if v == 0.0 {
                        0.0
                    } else {
                        v * v.ln()
                    }
                })
                .sum(),
            PotentialTerm::Power { p } => x.iter().map(|v| v.abs().powf(*p)).sum(),
            PotentialTerm::Log => x
                .iter()
                .map(|&v| if v <= 0.0 { f64::INFINITY } else { -v.ln() })
                .sum(),
            PotentialTerm::Exp => x.iter().map(|v| v.exp()).sum(),
            PotentialTerm::LogDet { side, offset } => {
                let codec = SvecCodec::new(*side);
                if x.len() < offset + codec.dim() {
                    return f64::INFINITY;
                }
                let block = DVector::from_fn(codec.dim(), |i, _| x[offset + i]);
                crate::psd::logdet_barrier_value(&codec.smat(&block))
            }
        }
    }

    /// How many epigraph variables the reduction introduces for this term in
    /// dimension `d`.
    fn epigraph_vars(&self, d: usize) -> usize {
        match self {
            PotentialTerm::Linear { .. } => 0,
            PotentialTerm::Quadratic { .. } | PotentialTerm::Norm { .. } => 1,
            PotentialTerm::Entropy | PotentialTerm::Power { .. } | PotentialTerm::Log | PotentialTerm::Exp => d,
            PotentialTerm::LogDet { .. } => 0,
        }
    }
}

/// Declarative description of the sampling problem `exp(-sum f_i) . 1_K`.
///
/// Integrability of the target is the caller's assertion; it is checked only
/// heuristically (the reduced composite metric aborts when the feasible set
/// contains a straight line).
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub dim: usize,
    pub constraints: Vec<ConstraintTerm>,
    pub potentials: Vec<PotentialTerm>,
}

impl ProblemSpec {
    pub fn new(dim: usize, constraints: Vec<ConstraintTerm>, potentials: Vec<PotentialTerm>) -> Self {
        Self { dim, constraints, potentials }
    }

    /// Total potential `sum_i f_i(x)` on the original space.
    pub fn potential(&self, x: &Point) -> f64 {
        self.potentials.iter().map(|p| p.value(x)).sum()
    }

    /// Strict interior of the constraint intersection.
    pub fn is_interior(&self, x: &Point) -> bool {
        x.len() == self.dim && self.constraints.iter().all(|c| c.is_interior(x))
    }
}

/// Which metric backs linear constraints in the reduction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinearMetricKind {
    #[default]
    Log,
    Vaidya,
    Lewis,
}

/// Epigraph bookkeeping: which potential produced which `t` coordinates.
#[derive(Clone, Debug)]
pub struct EpigraphInfo {
    /// Index into `spec.potentials`.
    pub potential: usize,
    /// Absolute coordinates of the introduced variables.
    pub t_coords: Vec<usize>,
}

/// The epigraph-augmented exponential-form problem, plus the projection back
/// to the original space.
pub struct ReducedProblem {
    spec: ProblemSpec,
    /// Augmented dimension `d + T`.
    ambient: usize,
    /// Cost vector: zeros on the `x` block, ones on the epigraph block.
    cost: DVector<f64>,
    /// Barrier parts, each already embedded into the ambient space, with the
    /// coordinate set it acts on.
    parts: Vec<(Box<dyn Metric>, Vec<usize>)>,
    epigraphs: Vec<EpigraphInfo>,
}

impl ReducedProblem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn original_dim(&self) -> usize {
        self.spec.dim
    }

    pub fn cost(&self) -> &DVector<f64> {
        &self.cost
    }

    pub fn epigraphs(&self) -> &[EpigraphInfo] {
        &self.epigraphs
    }

    pub fn parts(&self) -> &[(Box<dyn Metric>, Vec<usize>)] {
        &self.parts
    }

    /// The composite walk metric `k sum_i gbar_i` over the ambient space.
    pub fn composite(&self) -> Result<crate::calculus::CompositeMetric> {
        let mut embedded: Vec<Box<dyn Metric>> = Vec::with_capacity(self.parts.len());
        for (metric, coords) in &self.parts {
            embedded.push(Box::new(crate::calculus::embed(
                metric.clone_box(),
                coords.clone(),
                self.ambient,
            )?));
        }
        crate::calculus::sum(embedded)
    }

    /// Lifts a strictly feasible `x` to a strictly feasible augmented point
    /// by setting each epigraph variable to `f_i(x) + margin`.
    pub fn lift(&self, x: &Point, margin: f64) -> Result<Point> {
        if x.len() != self.spec.dim {
            return Err(Error::Dimension(format!(
                "expected original dimension {}, got {}",
                self.spec.dim,
                x.len()
            )));
        }
        if !self.spec.is_interior(x) {
            return Err(Error::NotInterior("lift needs a strictly feasible x".into()));
        }
        let mut y = DVector::zeros(self.ambient);
        y.rows_mut(0, x.len()).copy_from(x);
        for info in &self.epigraphs {
            match &self.spec.potentials[info.potential] {
                PotentialTerm::Quadratic { .. } | PotentialTerm::Norm { .. } => {
                    let f = self.spec.potentials[info.potential].value(x);
                    y[info.t_coords[0]] = f + margin;
                }
                PotentialTerm::Entropy => {
                    for (i, &tc) in info.t_coords.iter().enumerate() {
                        y[tc] = x[i] * x[i].ln() + margin;
                    }
                }
                PotentialTerm::Power { p } => {
                    for (i, &tc) in info.t_coords.iter().enumerate() {
                        y[tc] = x[i].abs().powf(*p) + margin;
                    }
                }
                PotentialTerm::Log => {
                    for (i, &tc) in info.t_coords.iter().enumerate() {
                        y[tc] = -x[i].ln() + margin;
                    }
                }
                PotentialTerm::Exp => {
                    for (i, &tc) in info.t_coords.iter().enumerate() {
                        y[tc] = x[i].exp() + margin;
                    }
                }
                PotentialTerm::Linear { .. } | PotentialTerm::LogDet { .. } => {}
            }
        }
        Ok(y)
    }
}

/// Projects an augmented sample back to the original space: the first `d`
/// coordinates.
pub fn project_sample(red: &ReducedProblem, y: &Point) -> Result<Point> {
    if y.len() != red.ambient {
        return Err(Error::Dimension(format!(
            "expected augmented dimension {}, got {}",
            red.ambient,
            y.len()
        )));
    }
    Ok(DVector::from_fn(red.spec.dim, |i, _| y[i]))
}

/// Reduces a structured problem to exponential form with the default log
/// barrier on linear constraints.
pub fn reduce(spec: ProblemSpec) -> Result<ReducedProblem> {
    reduce_with(spec, LinearMetricKind::Log)
}

/// Reduction with an explicit choice of linear-constraint metric.
pub fn reduce_with(spec: ProblemSpec, linear_kind: LinearMetricKind) -> Result<ReducedProblem> {
    let d = spec.dim;
    let t_total: usize = spec.potentials.iter().map(|p| p.epigraph_vars(d)).sum();
    let ambient = d + t_total;

    let mut cost = DVector::zeros(ambient);
    for i in d..ambient {
        cost[i] = 1.0;
    }

    let x_coords: Vec<usize> = (0..d).collect();
    let mut parts: Vec<(Box<dyn Metric>, Vec<usize>)> = Vec::new();
    let mut epigraphs = Vec::new();

    // Barrier part count decides the PSD scaling convention below.
    let epigraph_terms = spec
        .potentials
        .iter()
        .filter(|p| p.epigraph_vars(d) > 0)
        .count();
    let total_parts = spec.constraints.len() + epigraph_terms;

    for c in &spec.constraints {
        match c {
            ConstraintTerm::Linear { a, b } => {
                if a.ncols() != d {
                    return Err(Error::Dimension("linear constraint has wrong width".into()));
                }
                let metric: Box<dyn Metric> = match linear_kind {
                    LinearMetricKind::Log => Box::new(LogBarrier::new(a.clone(), b.clone())?),
                    LinearMetricKind::Vaidya => Box::new(VaidyaMetric::new(a.clone(), b.clone())?),
                    LinearMetricKind::Lewis => Box::new(LewisMetric::new(a.clone(), b.clone())?),
                };
                parts.push((metric, x_coords.clone()));
            }
            ConstraintTerm::Ellipsoid { q, p, l } => {
                if q.nrows() != d || p.len() != d {
                    return Err(Error::Dimension("ellipsoid constraint has wrong width".into()));
                }
                parts.push((Box::new(ellipsoid_barrier(q.clone(), p.clone(), *l)?), x_coords.clone()));
            }
            ConstraintTerm::PsdCone { side, offset } => {
                let codec = SvecCodec::new(*side);
                if offset + codec.dim() > d {
                    return Err(Error::Dimension("PSD block exceeds the ambient x dimension".into()));
                }
                let barrier = if total_parts > 1 {
                    LogDetBarrier::combined(*side)
                } else {
                    LogDetBarrier::standalone(*side)
                };
                let coords: Vec<usize> = (*offset..offset + codec.dim()).collect();
                parts.push((Box::new(barrier), coords));
            }
        }
    }

    let mut next_t = d;
    for (pi, pot) in spec.potentials.iter().enumerate() {
        match pot {
            PotentialTerm::Linear { c } => {
                if c.len() != d {
                    return Err(Error::Dimension("linear potential has wrong width".into()));
                }
                for i in 0..d {
                    cost[i] += c[i];
                }
            }
            PotentialTerm::Quadratic { sigma, mu } => {
                let t = next_t;
                next_t += 1;
                let mut coords = x_coords.clone();
                coords.push(t);
                parts.push((Box::new(gaussian_epigraph_barrier(sigma.clone(), mu.clone())?), coords));
                epigraphs.push(EpigraphInfo { potential: pi, t_coords: vec![t] });
            }
            PotentialTerm::Norm { sigma, mu } => {
                let t = next_t;
                next_t += 1;
                let mut coords = x_coords.clone();
                coords.push(t);
                parts.push((Box::new(soc_barrier(sigma.clone(), mu.clone())?), coords));
                epigraphs.push(EpigraphInfo { potential: pi, t_coords: vec![t] });
            }
            PotentialTerm::Entropy | PotentialTerm::Power { .. } | PotentialTerm::Log | PotentialTerm::Exp => {
                let ts: Vec<usize> = (next_t..next_t + d).collect();
                next_t += d;
                let mut coords = x_coords.clone();
                coords.extend_from_slice(&ts);
                let barrier: Box<dyn Metric> = match pot {
                    PotentialTerm::Entropy => Box::new(entropy_barrier(d)?),
                    PotentialTerm::Power { p } => Box::new(power_barrier(d, *p)?),
                    PotentialTerm::Log => Box::new(log_epigraph_barrier(d)?),
                    PotentialTerm::Exp => Box::new(exp_epigraph_barrier(d)?),
                    _ => unreachable!(),
                };
                parts.push((barrier, coords));
                epigraphs.push(EpigraphInfo { potential: pi, t_coords: ts });
            }
            PotentialTerm::LogDet { .. } => {
                // No catalog barrier for the epigraph of -log det; the
                // compatibility construction it would need is out of scope.
                return Err(Error::UnsupportedTerm(
                    "LogDet potentials cannot be reduced to exponential form".into(),
                ));
            }
        }
    }

    if parts.is_empty() {
        return Err(Error::NeedFeasiblePoint(
            "problem has no constraints and no epigraphs; the target is not integrable".into(),
        ));
    }

    Ok(ReducedProblem { spec, ambient, cost, parts, epigraphs })
}
