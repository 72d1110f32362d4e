//! The Metropolis-filtered Dikin walk over any local metric.
//!
//! Proposals are `z ~ N(x, (r^2/d) g(x)^{-1})`; the filter uses the exact
//! proposal-density ratio, so the chain is reversible with respect to
//! `exp(-f) . 1_K` up to floating arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{Metric, MetricPoint};
use crate::model::Point;
use nalgebra::{DMatrix, DVector};

/// Default proposal radius constant.
pub const DEFAULT_R0: f64 = 0.3;

/// Step radius for a potential that is `beta`-relatively smooth in the
/// metric: `r0 * min(1, beta^{-1/2})`.
pub fn default_radius(beta: f64) -> f64 {
    radius_with_r0(DEFAULT_R0, beta)
}

pub fn radius_with_r0(r0: f64, beta: f64) -> f64 {
    if beta <= 0.0 {
        r0
    } else {
        r0 * (1.0f64).min(1.0 / beta.sqrt())
    }
}

/// Potential of the target `exp(-f)`; the walk consumes only differences.
pub trait Potential: Send + Sync {
    fn value(&self, x: &Point) -> f64;

    /// `f(z) - f(x)`. Override when a stabler form than the difference of
    /// values exists.
    fn delta(&self, x: &Point, z: &Point) -> f64 {
        self.value(z) - self.value(x)
    }
}

/// Uniform target: `f = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformTarget;

impl Potential for UniformTarget {
    fn value(&self, _x: &Point) -> f64 {
        0.0
    }

    fn delta(&self, _x: &Point, _z: &Point) -> f64 {
        0.0
    }
}

/// Linear potential `c . x`, the reduced problem's cost.
#[derive(Clone, Debug)]
pub struct LinearCost {
    pub c: DVector<f64>,
}

impl Potential for LinearCost {
    fn value(&self, x: &Point) -> f64 {
        self.c.dot(x)
    }

    fn delta(&self, x: &Point, z: &Point) -> f64 {
        // difference taken coordinate-wise before the dot product
        self.c.dot(&(z - x))
    }
}

/// Potentials exposing derivatives (needed by the analytic-center solver and
/// the relative-convexity bookkeeping).
pub trait SmoothPotential: Potential {
    fn grad(&self, x: &Point) -> DVector<f64>;
    fn hess(&self, x: &Point) -> DMatrix<f64>;
    /// Relative convexity/smoothness `(alpha, beta)` of the potential with
    /// respect to the walk barrier.
    fn relative_bounds(&self) -> (f64, f64);
}

impl SmoothPotential for UniformTarget {
    fn grad(&self, x: &Point) -> DVector<f64> {
        DVector::zeros(x.len())
    }

    fn hess(&self, x: &Point) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }

    fn relative_bounds(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

impl SmoothPotential for LinearCost {
    fn grad(&self, _x: &Point) -> DVector<f64> {
        self.c.clone()
    }

    fn hess(&self, _x: &Point) -> DMatrix<f64> {
        DMatrix::zeros(self.c.len(), self.c.len())
    }

    fn relative_bounds(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Walk configuration.
#[derive(Clone, Debug)]
pub struct WalkConfig {
    pub radius: f64,
    /// Probability of staying put before proposing (0 or 1/2; 1 is a test
    /// hook).
    pub laziness: f64,
    pub steps: usize,
    pub seed: u64,
}

impl WalkConfig {
    /// Guards `r <= 1`; use [`WalkConfig::with_large_radius`] to override.
    pub fn new(radius: f64, steps: usize, seed: u64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::Shape(format!("radius {radius} outside (0, 1]; see with_large_radius")));
        }
        if steps == 0 {
            return Err(Error::Shape("need at least one step".into()));
        }
        Ok(Self { radius, laziness: 0.5, steps, seed })
    }

    pub fn with_large_radius(radius: f64, steps: usize, seed: u64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Shape(format!("radius must be positive, got {radius}")));
        }
        if steps == 0 {
            return Err(Error::Shape("need at least one step".into()));
        }
        Ok(Self { radius, laziness: 0.5, steps, seed })
    }

    pub fn lazy(mut self, laziness: f64) -> Self {
        self.laziness = laziness;
        self
    }
}

/// Acceptance bookkeeping.
#[derive(Clone, Copy, Debug, Default)]
pub struct WalkStats {
    pub proposed: usize,
    pub accepted: usize,
    pub rejected_infeasible: usize,
    pub lazy_stays: usize,
}

impl WalkStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Chain state: current point with its cached metric factorization and
/// potential value.
pub struct WalkState {
    pub x: Point,
    point: Box<dyn MetricPoint>,
    f_x: f64,
    pub stats: WalkStats,
}

impl WalkState {
    pub fn log_det(&self) -> f64 {
        self.point.log_det()
    }
}

/// Log of the Metropolis ratio `R_x(z)`; `-inf` when `z` is infeasible.
///
/// `log R = (log det g(z) - log det g(x))/2
///          - (d / 2 r^2) (||x-z||^2_{g(z)} - ||z-x||^2_{g(x)})
///          - (f(z) - f(x))`.
fn log_ratio(
    point_x: &dyn MetricPoint,
    point_z: &dyn MetricPoint,
    x: &Point,
    z: &Point,
    radius: f64,
    delta_f: f64,
) -> f64 {
    let d = point_x.dim() as f64;
    let diff = z - x;
    let q_x = point_x.quad_form(&diff);
    let q_z = point_z.quad_form(&diff);
    0.5 * (point_z.log_det() - point_x.log_det()) - d / (2.0 * radius * radius) * (q_z - q_x) - delta_f
}

/// Log of the Metropolis ratio evaluated from scratch; `-inf` when `z` is
/// infeasible (diagnostic path; the walk itself reuses cached state).
pub fn log_acceptance_ratio(
    metric: &dyn Metric,
    potential: &dyn Potential,
    radius: f64,
    x: &Point,
    z: &Point,
) -> Result<f64> {
    if !metric.barrier(z).is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let px = metric.prepare(x)?;
    let pz = match metric.prepare(z) {
        Ok(p) => p,
        Err(_) => return Ok(f64::NEG_INFINITY),
    };
    Ok(log_ratio(px.as_ref(), pz.as_ref(), x, z, radius, potential.delta(x, z)))
}

/// Acceptance probability `A_x(z) = min(1, R_x(z))`.
pub fn acceptance_ratio(
    metric: &dyn Metric,
    potential: &dyn Potential,
    radius: f64,
    x: &Point,
    z: &Point,
) -> Result<f64> {
    Ok(log_acceptance_ratio(metric, potential, radius, x, z)?.exp().min(1.0))
}

/// The Dikin walk. One instance owns one chain.
pub struct DikinWalk<'a> {
    metric: &'a dyn Metric,
    potential: &'a dyn Potential,
    cfg: WalkConfig,
    rng: ChaCha8Rng,
    state: WalkState,
}

impl<'a> DikinWalk<'a> {
    pub fn new(
        metric: &'a dyn Metric,
        potential: &'a dyn Potential,
        x0: Point,
        cfg: WalkConfig,
    ) -> Result<Self> {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::with_rng(metric, potential, x0, cfg, rng)
    }

    /// Builds a walk around an existing RNG stream (phase schedules carry one
    /// stream across stages).
    pub fn with_rng(
        metric: &'a dyn Metric,
        potential: &'a dyn Potential,
        x0: Point,
        cfg: WalkConfig,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if !metric.barrier(&x0).is_finite() {
            return Err(Error::NotInterior("walk must start strictly inside the domain".into()));
        }
        let point = metric.prepare(&x0)?;
        let f_x = potential.value(&x0);
        Ok(Self {
            metric,
            potential,
            cfg,
            rng,
            state: WalkState { x: x0, point, f_x, stats: WalkStats::default() },
        })
    }

    /// Tears the walk down into its position and RNG stream.
    pub fn into_position_rng(self) -> (Point, ChaCha8Rng) {
        (self.state.x, self.rng)
    }

    /// Replaces the target potential, keeping the current point and RNG
    /// stream (the cooling schedule walks one evolving chain across phases).
    pub fn retarget(&mut self, potential: &'a dyn Potential) {
        self.potential = potential;
        self.state.f_x = potential.value(&self.state.x);
    }

    pub fn set_radius(&mut self, radius: f64) {
        self.cfg.radius = radius;
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn position(&self) -> &Point {
        &self.state.x
    }

    pub fn stats(&self) -> WalkStats {
        self.state.stats
    }

    pub fn reset_stats(&mut self) {
        self.state.stats = WalkStats::default();
    }

    /// Draws the Gaussian proposal `z = x + (r/sqrt(d)) g(x)^{-1/2} xi`.
    pub fn propose(&mut self) -> Point {
        let d = self.metric.dim() as f64;
        let step = self.state.point.draw(self.cfg.radius / d.sqrt(), &mut self.rng);
        &self.state.x + step
    }

    /// One transition of the (lazy) chain. Returns true when the chain moved.
    pub fn step(&mut self) -> bool {
        if self.cfg.laziness > 0.0 && self.rng.gen::<f64>() < self.cfg.laziness {
            self.state.stats.lazy_stays += 1;
            return false;
        }
        let z = self.propose();
        self.state.stats.proposed += 1;
        if !self.metric.barrier(&z).is_finite() {
            self.state.stats.rejected_infeasible += 1;
            return false;
        }
        let point_z = match self.metric.prepare(&z) {
            Ok(p) => p,
            Err(_) => {
                self.state.stats.rejected_infeasible += 1;
                return false;
            }
        };
        let delta_f = self.potential.delta(&self.state.x, &z);
        let lr = log_ratio(
            self.state.point.as_ref(),
            point_z.as_ref(),
            &self.state.x,
            &z,
            self.cfg.radius,
            delta_f,
        );
        let accept = lr >= 0.0 || self.rng.gen::<f64>() < lr.exp();
        if accept {
            self.state.x = z;
            self.state.point = point_z;
            self.state.f_x += delta_f;
            self.state.stats.accepted += 1;
        }
        accept
    }

    /// Runs `cfg.steps` transitions, streaming every visited state to the
    /// sink (post-transition, including holds).
    pub fn run_with_sink(&mut self, mut sink: impl FnMut(&Point)) {
        for _ in 0..self.cfg.steps {
            self.step();
            sink(&self.state.x);
        }
    }

    /// Runs and collects the trajectory.
    pub fn run(&mut self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.cfg.steps);
        self.run_with_sink(|x| out.push(x.clone()));
        out
    }

    /// Runs for `n` transitions without recording.
    pub fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.step();
        }
    }
}
