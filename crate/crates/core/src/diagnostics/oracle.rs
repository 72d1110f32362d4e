//! Low-dimensional ground-truth machinery: bounding-box rejection sampling,
//! adaptive quadrature, and a minimal ball-walk baseline for comparison runs.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Point, ProblemSpec};

/// Axis-aligned bounding box for the rejection oracle.
#[derive(Clone, Debug)]
pub struct BoundingBox {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl BoundingBox {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension("bounding box corners differ in length".into()));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l >= h) {
            return Err(Error::Shape("bounding box has empty side".into()));
        }
        Ok(Self { lo, hi })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        DVector::from_fn(self.lo.len(), |i, _| rng.gen_range(self.lo[i]..self.hi[i]))
    }
}

/// Exact i.i.d. samples from `exp(-sum f_i) . 1_K` by bounding-box rejection.
///
/// Guarded to dimension <= 3. The potential floor is pre-scanned; if a lower
/// value is met while sampling, the run restarts with the tighter floor so
/// acceptance probabilities never exceed one.
pub fn rejection_oracle(
    spec: &ProblemSpec,
    bbox: &BoundingBox,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Point>> {
    if spec.dim > 3 {
        return Err(Error::OracleInfeasible(format!(
            "rejection oracle is limited to dimension <= 3, got {}",
            spec.dim
        )));
    }
    if bbox.lo.len() != spec.dim {
        return Err(Error::Dimension("bounding box dimension mismatch".into()));
    }

    // floor scan
    let mut floor = f64::INFINITY;
    for _ in 0..20_000 {
        let x = bbox.sample(rng);
        if spec.is_interior(&x) {
            floor = floor.min(spec.potential(&x));
        }
    }
    if !floor.is_finite() {
        return Err(Error::OracleInfeasible("no feasible point found in the bounding box".into()));
    }

    'restart: loop {
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n {
            attempts += 1;
            if attempts > 2_000_000 && (out.len() as f64 / attempts as f64) < 1e-6 {
                return Err(Error::OracleInfeasible(format!(
                    "acceptance rate below 1e-6 after {attempts} attempts"
                )));
            }
            let x = bbox.sample(rng);
            if !spec.is_interior(&x) {
                continue;
            }
            let f = spec.potential(&x);
            if f < floor {
                // tighter floor discovered; previous acceptances were biased
                floor = f;
                continue 'restart;
            }
            if rng.gen::<f64>() < (-(f - floor)).exp() {
                out.push(x);
            }
        }
        return Ok(out);
    }
}

/// Adaptive Simpson quadrature.
pub fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Total variation between a sample histogram and a (possibly unnormalized)
/// density on `[a, b]`, using `bins` equal cells and per-cell quadrature.
pub fn tv_samples_vs_density<F: Fn(f64) -> f64 + Copy>(
    samples: &[f64],
    density: F,
    a: f64,
    b: f64,
    bins: usize,
) -> Result<f64> {
    if samples.is_empty() || bins == 0 {
        return Err(Error::Statistics("tv comparison needs samples and bins".into()));
    }
    let mass = integrate(density, a, b, 1e-10);
    if !(mass > 0.0) {
        return Err(Error::Statistics("density has no mass on the window".into()));
    }
    let width = (b - a) / bins as f64;
    let mut counts = vec![0.0f64; bins];
    let mut inside = 0usize;
    for &s in samples {
        if s >= a && s < b {
            let idx = (((s - a) / width) as usize).min(bins - 1);
            counts[idx] += 1.0;
            inside += 1;
        }
    }
    if inside == 0 {
        return Err(Error::Statistics("no samples in the comparison window".into()));
    }
    let n = samples.len() as f64;
    let mut tv = 0.0;
    for (i, c) in counts.iter().enumerate() {
        let lo = a + i as f64 * width;
        let cell = integrate(density, lo, lo + width, 1e-10) / mass;
        tv += (c / n - cell).abs();
    }
    // mass that fell outside the window counts fully
    tv += (n - inside as f64) / n;
    Ok(0.5 * tv)
}

/// Minimal ball walk for comparison plots: isotropic Gaussian proposals with
/// a Metropolis filter on `exp(-f) . 1_K`.
pub fn ball_walk<F, G>(
    feasible: F,
    potential: G,
    x0: Point,
    step: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Point>, f64)
where
    F: Fn(&Point) -> bool,
    G: Fn(&Point) -> f64,
{
    use rand_distr::StandardNormal;
    let mut x = x0;
    let mut fx = potential(&x);
    let mut out = Vec::with_capacity(steps);
    let mut accepted = 0usize;
    for _ in 0..steps {
        let z = DVector::from_fn(x.len(), |i, _| x[i] + step * rng.sample::<f64, _>(StandardNormal));
        if feasible(&z) {
            let fz = potential(&z);
            if fz <= fx || rng.gen::<f64>() < (fx - fz).exp() {
                x = z;
                fx = fz;
                accepted += 1;
            }
        }
        out.push(x.clone());
    }
    (out, accepted as f64 / steps as f64)
}
