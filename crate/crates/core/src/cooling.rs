//! The four-phase sampling schedule: analytic-center initialization, a
//! truncated-Gaussian warm start, two annealing regimes for `sigma^2`, and a
//! final high-accuracy walk targeting `exp(-f) . 1_K`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::model::Point;
use crate::walk::{radius_with_r0, DikinWalk, Potential, SmoothPotential, WalkConfig, DEFAULT_R0};

/// Initial regularization `sigma_0^2 = 1e-5 / d^3`.
pub fn sigma0_sq(d: usize) -> f64 {
    1e-5 / (d as f64).powi(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Truncated-Gaussian initialization at the analytic center.
    Init,
    /// Annealing with `sigma^2 <= nu/d`, update factor `1 + 1/sqrt(d)`.
    Anneal,
    /// Annealing with `nu/d < sigma^2 <= nu`, update factor `1 + sigma/sqrt(nu)`.
    Accelerate,
    /// Final walk on the target.
    Target,
}

/// Annealing state: current `sigma^2` against the combined self-concordance
/// parameter `nu` in ambient dimension `d`.
#[derive(Clone, Debug)]
pub struct CoolingSchedule {
    pub d: usize,
    pub nu: f64,
    pub sigma_sq: f64,
}

impl CoolingSchedule {
    pub fn new(d: usize, nu: f64) -> Self {
        Self { d, nu, sigma_sq: sigma0_sq(d) }
    }

    /// Phase the current `sigma^2` falls into. The boundary `sigma^2 = nu/d`
    /// belongs to the accelerated regime.
    pub fn phase(&self) -> Phase {
        if self.sigma_sq > self.nu {
            Phase::Target
        } else if self.sigma_sq < self.nu / self.d as f64 {
            Phase::Anneal
        } else {
            Phase::Accelerate
        }
    }

    /// Whether the annealing loop has terminated.
    pub fn done(&self) -> bool {
        self.sigma_sq > self.nu
    }

    /// One multiplicative update of `sigma^2` per the phase rule.
    pub fn advance(&mut self) {
        let d = self.d as f64;
        if self.sigma_sq < self.nu / d {
            self.sigma_sq *= 1.0 + 1.0 / d.sqrt();
        } else {
            self.sigma_sq *= 1.0 + self.sigma_sq.sqrt() / self.nu.sqrt();
        }
    }

    /// Number of updates taking `sigma_0^2` to `nu/d`:
    /// `ceil(log(nu / (d sigma_0^2)) / log(1 + 1/sqrt(d)))`.
    pub fn phase2_step_count(&self) -> usize {
        let d = self.d as f64;
        let target = self.nu / d;
        let s0 = sigma0_sq(self.d);
        if target <= s0 {
            return 0;
        }
        ((target / s0).ln() / (1.0 + 1.0 / d.sqrt()).ln()).ceil() as usize
    }
}

/// Relative convexity/smoothness `(alpha, beta)` of the annealed potential
/// with respect to the barrier, given the base potential's own bounds.
pub fn relative_bounds(schedule: &CoolingSchedule, base: (f64, f64)) -> (f64, f64) {
    let (alpha_f, beta_f) = base;
    let d = schedule.d as f64;
    match schedule.phase() {
        Phase::Init | Phase::Anneal => {
            let s = schedule.sigma_sq;
            (((schedule.nu / d) * alpha_f + 1.0) / s, ((schedule.nu / d) * beta_f + 1.0) / s)
        }
        Phase::Accelerate => {
            let s = schedule.sigma_sq;
            (alpha_f + 1.0 / s, beta_f + 1.0 / s)
        }
        Phase::Target => (alpha_f, beta_f),
    }
}

/// The annealed potential `V_{sigma^2}` of the schedule:
/// `(fbar + phi)/sigma^2` early, `f + phi/sigma^2` late, plain `f` in the
/// target phase.
pub struct AnnealedPotential<'a> {
    cost: &'a dyn SmoothPotential,
    barrier: &'a dyn Metric,
    mode: AnnealMode,
}

#[derive(Clone, Copy, Debug)]
pub enum AnnealMode {
    /// `V = (f_factor * f + phi) / sigma^2` with `f_factor = nu/d`.
    Early { f_factor: f64, inv_sigma_sq: f64 },
    /// `V = f + phi / sigma^2`.
    Late { inv_sigma_sq: f64 },
    /// `V = f`.
    Target,
}

impl<'a> AnnealedPotential<'a> {
    pub fn new(cost: &'a dyn SmoothPotential, barrier: &'a dyn Metric, mode: AnnealMode) -> Self {
        Self { cost, barrier, mode }
    }

    pub fn for_schedule(
        cost: &'a dyn SmoothPotential,
        barrier: &'a dyn Metric,
        schedule: &CoolingSchedule,
    ) -> Self {
        let mode = match schedule.phase() {
            Phase::Init | Phase::Anneal => AnnealMode::Early {
                f_factor: schedule.nu / schedule.d as f64,
                inv_sigma_sq: 1.0 / schedule.sigma_sq,
            },
            Phase::Accelerate => AnnealMode::Late { inv_sigma_sq: 1.0 / schedule.sigma_sq },
            Phase::Target => AnnealMode::Target,
        };
        Self::new(cost, barrier, mode)
    }
}

impl Potential for AnnealedPotential<'_> {
    fn value(&self, x: &Point) -> f64 {
        let f = self.cost.value(x);
        match self.mode {
            AnnealMode::Early { f_factor, inv_sigma_sq } => {
                (f_factor * f + self.barrier.barrier(x)) * inv_sigma_sq
            }
            AnnealMode::Late { inv_sigma_sq } => f + self.barrier.barrier(x) * inv_sigma_sq,
            AnnealMode::Target => f,
        }
    }

    fn delta(&self, x: &Point, z: &Point) -> f64 {
        let df = self.cost.delta(x, z);
        match self.mode {
            AnnealMode::Early { f_factor, inv_sigma_sq } => {
                (f_factor * df + self.barrier.barrier(z) - self.barrier.barrier(x)) * inv_sigma_sq
            }
            AnnealMode::Late { inv_sigma_sq } => {
                df + (self.barrier.barrier(z) - self.barrier.barrier(x)) * inv_sigma_sq
            }
            AnnealMode::Target => df,
        }
    }
}

/// Damped Newton minimization of `potential + barrier` with Armijo
/// backtracking; stops when the Newton decrement drops below `tol`.
pub fn analytic_center(
    metric: &dyn Metric,
    potential: &dyn SmoothPotential,
    hint: &Point,
    tol: f64,
    max_iters: usize,
) -> Result<Point> {
    if !metric.barrier(hint).is_finite() {
        return Err(Error::NeedFeasiblePoint(
            "analytic-center hint is not strictly feasible".into(),
        ));
    }
    let objective = |y: &Point| potential.value(y) + metric.barrier(y);
    let mut y = hint.clone();
    let mut fy = objective(&y);
    for _ in 0..max_iters {
        let grad = metric.barrier_grad(&y)? + potential.grad(&y);
        let hess = metric.value(&y)? + potential.hess(&y);
        let chol = nalgebra::Cholesky::new(hess)
            .ok_or_else(|| Error::Factorization("Newton system is not positive definite".into()))?;
        let dir = chol.solve(&grad);
        let dec_sq = grad.dot(&dir);
        if dec_sq.sqrt() <= tol {
            return Ok(y);
        }
        // Armijo backtracking: accept f(y - t dir) <= f(y) - 0.25 t dec^2
        let mut t = 1.0;
        let mut advanced = false;
        while t > 1e-14 {
            let cand = &y - t * &dir;
            let fc = objective(&cand);
            if fc.is_finite() && fc <= fy - 0.25 * t * dec_sq {
                y = cand;
                fy = fc;
                advanced = true;
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            return Err(Error::Convergence { iters: max_iters, residual: dec_sq.sqrt() });
        }
    }
    Err(Error::Convergence { iters: max_iters, residual: f64::NAN })
}

/// Scales a smooth potential by a constant factor (used for `fbar = (nu/d) f`).
pub struct ScaledSmooth<'a> {
    pub inner: &'a dyn SmoothPotential,
    pub factor: f64,
}

impl Potential for ScaledSmooth<'_> {
    fn value(&self, x: &Point) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn delta(&self, x: &Point, z: &Point) -> f64 {
        self.factor * self.inner.delta(x, z)
    }
}

impl SmoothPotential for ScaledSmooth<'_> {
    fn grad(&self, x: &Point) -> DVector<f64> {
        self.factor * self.inner.grad(x)
    }

    fn hess(&self, x: &Point) -> DMatrix<f64> {
        self.factor * self.inner.hess(x)
    }

    fn relative_bounds(&self) -> (f64, f64) {
        let (a, b) = self.inner.relative_bounds();
        (self.factor * a, self.factor * b)
    }
}

/// Draws the Phase-1 start: `N(x*, sigma_0^2 / (1 + nu beta / d) g(x*)^{-1})`
/// truncated to the Dikin ellipsoid of radius `3 sigma_0 sqrt(d)`, by
/// rejection.
pub fn phase1_start(
    metric: &dyn Metric,
    x_star: &Point,
    nu: f64,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Point> {
    let d = metric.dim() as f64;
    let s0_sq = sigma0_sq(metric.dim());
    let point = metric.prepare(x_star)?;
    let scale = (s0_sq / (1.0 + nu * beta / d)).sqrt();
    let radius_sq = 9.0 * s0_sq * d;
    const MAX_ATTEMPTS: usize = 1_000_000;
    for _ in 0..MAX_ATTEMPTS {
        let v = point.draw(scale, rng);
        if point.quad_form(&v) > radius_sq {
            continue;
        }
        let y = x_star + v;
        if metric.barrier(&y).is_finite() {
            return Ok(y);
        }
    }
    Err(Error::Sampling(format!(
        "phase-1 rejection stalled after {MAX_ATTEMPTS} attempts"
    )))
}

/// Per-stage progress record handed to the progress callback.
#[derive(Clone, Copy, Debug)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub sigma_sq: f64,
    pub steps: usize,
    pub acceptance: f64,
}

/// Orchestration knobs. The inner budget per `sigma^2` update is
/// `inner_multiplier * d` walk transitions; the final phase multiplies that
/// by `ceil(log(1/epsilon))`.
#[derive(Clone, Debug)]
pub struct CoolingConfig {
    pub inner_multiplier: usize,
    pub r0: f64,
    pub laziness: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Emission stride for samples collected in the target phase.
    pub thin: usize,
}

impl Default for CoolingConfig {
    fn default() -> Self {
        Self { inner_multiplier: 50, r0: DEFAULT_R0, laziness: 0.5, epsilon: 0.01, seed: 0, thin: 0 }
    }
}

/// Summary of one schedule run.
#[derive(Clone, Debug, Default)]
pub struct CoolingReport {
    pub trace: Vec<PhaseRecord>,
    pub total_steps: usize,
    pub analytic_center: Option<Point>,
    /// True when `nu/d < sigma_0^2` so the slow annealing regime never ran.
    pub skipped_anneal: bool,
}

/// Gaussian cooling driven by the Dikin walk: one evolving chain is carried
/// across all phases.
pub struct Gcdw<'a> {
    pub metric: &'a dyn Metric,
    pub cost: &'a dyn SmoothPotential,
    pub nu: f64,
}

impl<'a> Gcdw<'a> {
    pub fn new(metric: &'a dyn Metric, cost: &'a dyn SmoothPotential, nu: f64) -> Self {
        Self { metric, cost, nu }
    }

    fn stage(
        &self,
        potential: &dyn Potential,
        x: Point,
        radius: f64,
        steps: usize,
        laziness: f64,
        rng: ChaCha8Rng,
    ) -> Result<(Point, ChaCha8Rng, f64)> {
        let cfg = WalkConfig::with_large_radius(radius.min(1.0), steps.max(1), 0)?.lazy(laziness);
        let mut walk = DikinWalk::with_rng(self.metric, potential, x, cfg, rng)?;
        walk.advance(steps);
        let acc = walk.stats().acceptance_rate();
        let (x, rng) = walk.into_position_rng();
        Ok((x, rng, acc))
    }

    /// Runs the full schedule and returns `n_samples` target-phase samples
    /// (in the augmented space) plus the run report.
    pub fn sample(
        &self,
        n_samples: usize,
        hint: &Point,
        cfg: &CoolingConfig,
        mut progress: Option<&mut dyn FnMut(&PhaseRecord)>,
    ) -> Result<(Vec<Point>, CoolingReport)> {
        let d = self.metric.dim();
        let mut report = CoolingReport::default();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let budget = cfg.inner_multiplier * d;
        let (_, beta_f) = self.cost.relative_bounds();

        // Phase 1: analytic center of fbar + phi, then the truncated Gaussian.
        let fbar = ScaledSmooth { inner: self.cost, factor: self.nu / d as f64 };
        let x_star = analytic_center(self.metric, &fbar, hint, 1e-8, 200)?;
        report.analytic_center = Some(x_star.clone());
        let mut x = phase1_start(self.metric, &x_star, self.nu, beta_f, &mut rng)?;

        let mut schedule = CoolingSchedule::new(d, self.nu);
        report.skipped_anneal = schedule.phase() != Phase::Anneal;
        {
            let target = AnnealedPotential::for_schedule(self.cost, self.metric, &schedule);
            let (_, beta) = relative_bounds(&schedule, self.cost.relative_bounds());
            let r = radius_with_r0(cfg.r0, beta);
            let (nx, nrng, acc) = self.stage(&target, x, r, budget, cfg.laziness, rng)?;
            x = nx;
            rng = nrng;
            let rec = PhaseRecord { phase: Phase::Init, sigma_sq: schedule.sigma_sq, steps: budget, acceptance: acc };
            if let Some(cb) = progress.as_deref_mut() {
                cb(&rec);
            }
            report.trace.push(rec);
            report.total_steps += budget;
        }

        // Phases 2 and 3: anneal sigma^2 upward until it clears nu.
        while !schedule.done() {
            let phase_before = schedule.phase();
            schedule.advance();
            let target = AnnealedPotential::for_schedule(self.cost, self.metric, &schedule);
            let (_, beta) = relative_bounds(&schedule, self.cost.relative_bounds());
            let r = radius_with_r0(cfg.r0, beta);
            let (nx, nrng, acc) = self.stage(&target, x, r, budget, cfg.laziness, rng)?;
            x = nx;
            rng = nrng;
            let rec = PhaseRecord { phase: phase_before, sigma_sq: schedule.sigma_sq, steps: budget, acceptance: acc };
            if let Some(cb) = progress.as_deref_mut() {
                cb(&rec);
            }
            report.trace.push(rec);
            report.total_steps += budget;
        }

        // Phase 4: the target itself.
        let target = AnnealedPotential::new(self.cost, self.metric, AnnealMode::Target);
        let (_, beta) = relative_bounds(
            &CoolingSchedule { d, nu: self.nu, sigma_sq: self.nu * 2.0 },
            self.cost.relative_bounds(),
        );
        let r = radius_with_r0(cfg.r0, beta);
        let log_eps = (1.0 / cfg.epsilon).ln().ceil().max(1.0) as usize;
        let burn = budget * log_eps;
        let (nx, nrng, acc) = self.stage(&target, x, r, burn, cfg.laziness, rng)?;
        x = nx;
        rng = nrng;
        let rec = PhaseRecord { phase: Phase::Target, sigma_sq: f64::INFINITY, steps: burn, acceptance: acc };
        if let Some(cb) = progress.as_deref_mut() {
            cb(&rec);
        }
        report.trace.push(rec);
        report.total_steps += burn;

        // Continued target-phase walking for the requested sample count.
        let thin = if cfg.thin == 0 { d.max(1) } else { cfg.thin };
        let cfg_walk = WalkConfig::with_large_radius(r.min(1.0), 1, 0)?.lazy(cfg.laziness);
        let mut walk = DikinWalk::with_rng(self.metric, &target, x, cfg_walk, rng)?;
        let mut samples = Vec::with_capacity(n_samples);
        while samples.len() < n_samples {
            walk.advance(thin);
            samples.push(walk.position().clone());
        }
        report.total_steps += n_samples * thin;
        Ok((samples, report))
    }
}
