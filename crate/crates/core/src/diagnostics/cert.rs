//! Numerical certificates for the self-concordance properties a barrier
//! claims: each check records pass/fail, the worst observed ratio, the bound
//! it was held against, and the sample count.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::fd;
use crate::metric::{Cert, Metric};
use crate::model::{Direction, Point};

/// Outcome of one property check.
#[derive(Clone, Debug)]
pub struct PropResult {
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the monitored ratio/error.
    pub worst: f64,
    /// The bound the ratio was compared against.
    pub bound: f64,
    pub samples: usize,
}

impl PropResult {
    fn new(name: &str, worst: f64, bound: f64, samples: usize) -> Self {
        Self { name: name.into(), pass: worst <= bound, worst, bound, samples }
    }
}

/// Empirical failure frequency of the average-self-concordance event at one
/// proposal radius.
#[derive(Clone, Debug)]
pub struct AscProbe {
    pub radius: f64,
    pub epsilon: f64,
    pub failure_rate: f64,
    pub draws: usize,
}

/// Certificate block for one barrier.
#[derive(Clone, Debug)]
pub struct CertificateBlock {
    pub results: Vec<PropResult>,
    pub asc: Vec<AscProbe>,
    /// Properties without the evaluators they need.
    pub unverified: Vec<String>,
}

impl CertificateBlock {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&PropResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

/// Options for [`certify_barrier`].
#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub dirs_per_point: usize,
    /// Slack multiplier on the SC/SSC bounds.
    pub slack: f64,
    /// Whether `g = hess(barrier)` exactly for this metric, enabling the
    /// Hessian-consistency check.
    pub hessian_is_metric: bool,
    /// Radii for the empirical ASC probe (empty disables it).
    pub asc_radii: Vec<f64>,
    pub asc_epsilon: f64,
    pub asc_draws: usize,
    pub fd_eps: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            dirs_per_point: 4,
            slack: 1.0 + 1e-7,
            hessian_is_metric: true,
            asc_radii: vec![],
            asc_epsilon: 0.1,
            asc_draws: 2000,
            fd_eps: 1e-4,
        }
    }
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Direction {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `g^{-1/2} D g^{-1/2}` via the Cholesky factor of `g` (same spectrum and
/// Frobenius norm as the symmetric whitening).
fn whiten(chol: &Cholesky<f64, nalgebra::Dyn>, d: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let li_d = chol.l_dirty().solve_lower_triangular(d)?;
    chol.l_dirty().solve_lower_triangular(&li_d.transpose())
}

/// Runs the certificate suite on interior points supplied by the caller.
///
/// Checks: SC eigenvalue bound, SSC Frobenius bound, barrier-gradient and
/// metric-derivative finite-difference consistency, Hessian-metric
/// consistency (when claimed), positivity of `D^2 g` (when the evaluator
/// exists), and the empirical ASC probe.
pub fn certify_barrier(
    metric: &dyn Metric,
    points: &[Point],
    opts: &CertifyOptions,
    rng: &mut ChaCha8Rng,
) -> CertificateBlock {
    let dim = metric.dim();
    let mut worst_sc: f64 = 0.0;
    let mut worst_ssc: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    let mut worst_dg: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    let mut worst_d2g: f64 = f64::NEG_INFINITY;
    let mut have_d2g = true;
    let mut samples = 0;

    for x in points {
        let g = match metric.value(x) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let chol = match Cholesky::new(g.clone()) {
            Some(c) => c,
            None => continue,
        };
        let grad = metric.barrier_grad(x).ok();
        for _ in 0..opts.dirs_per_point {
            // normalize to unit local norm: self-concordance controls the
            // higher derivatives in these units, keeping the
            // finite-difference stencils in their accurate regime
            let h_raw = random_direction(dim, rng);
            let raw_norm = (&g * &h_raw).dot(&h_raw).sqrt();
            if !(raw_norm > 0.0) {
                continue;
            }
            let h = h_raw / raw_norm;
            let h_norm = 1.0;
            samples += 1;
            if let Ok(dg) = metric.deriv(x, &h) {
                if let Some(w) = whiten(&chol, &dg) {
                    let fro = w.norm();
                    let spec = crate::linalg::sym_spectral_radius(&w);
                    worst_ssc = worst_ssc.max(fro / (2.0 * h_norm));
                    worst_sc = worst_sc.max(spec / (2.0 * h_norm));
                }
                if let Some(fd_dg) = fd::metric_derivative_fd(metric, x, &h, opts.fd_eps) {
                    let scale = dg.amax().max(g.amax());
                    worst_dg = worst_dg.max((fd_dg - &dg).amax() / scale);
                }
            }
            if let Some(grad) = grad.as_ref() {
                let an = grad.dot(&h);
                let fdv = fd::directional_derivative(|p| metric.barrier(p), x, &h, opts.fd_eps);
                worst_grad = worst_grad.max((an - fdv).abs() / an.abs().max(1.0));
            }
            if opts.hessian_is_metric {
                let an = (&g * &h).dot(&h);
                let fdv = fd::second_directional_derivative(|p| metric.barrier(p), x, &h, 1e-3);
                worst_hess = worst_hess.max((an - fdv).abs() / an.abs().max(1.0));
            }
            match metric.second_deriv(x, &h) {
                Some(Ok(d2)) => {
                    worst_d2g = worst_d2g.max(-crate::linalg::sym_min_eigenvalue(&d2));
                }
                Some(Err(_)) => {}
                None => have_d2g = false,
            }
        }
    }

    let mut results = vec![
        PropResult::new("sc_eigenvalue", worst_sc, opts.slack, samples),
        PropResult::new("ssc_frobenius", worst_ssc, opts.slack, samples),
        PropResult::new("grad_fd", worst_grad, 1e-5, samples),
        PropResult::new("metric_deriv_fd", worst_dg, 1e-4, samples),
    ];
    if opts.hessian_is_metric {
        results.push(PropResult::new("hessian_metric_fd", worst_hess, 1e-4, samples));
    }
    let mut unverified = Vec::new();
    if have_d2g && worst_d2g > f64::NEG_INFINITY {
        results.push(PropResult::new("d2g_min_eigenvalue", worst_d2g, 1e-8, samples));
    } else {
        unverified.push("d2g_min_eigenvalue".to_string());
    }
    let a = metric.amenability();
    if a.ssc == Cert::Unverified {
        unverified.push("ssc_claim".to_string());
    }

    // Empirical ASC probe at the requested radii.
    let mut asc = Vec::new();
    for &r in &opts.asc_radii {
        let mut fails = 0;
        let mut draws = 0;
        'outer: for x in points {
            let point = match metric.prepare(x) {
                Ok(p) => p,
                Err(_) => continue,
            };
            for _ in 0..(opts.asc_draws / points.len().max(1)).max(1) {
                let step = point.draw(r / (dim as f64).sqrt(), rng);
                let z = x + &step;
                let point_z = match metric.prepare(&z) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                draws += 1;
                let gap = point_z.quad_form(&step) - point.quad_form(&step);
                if gap > 2.0 * opts.asc_epsilon * r * r / dim as f64 {
                    fails += 1;
                }
                if draws >= opts.asc_draws {
                    break 'outer;
                }
            }
        }
        asc.push(AscProbe {
            radius: r,
            epsilon: opts.asc_epsilon,
            failure_rate: if draws == 0 { 1.0 } else { fails as f64 / draws as f64 },
            draws,
        });
    }

    CertificateBlock { results, asc, unverified }
}

/// SSC certificate for a metric that may be singular in the ambient space
/// (an embedding): whitening is regularized as `g + eps I`, evaluated at
/// `eps = 1e-8` and `1e-10`, and the two readings must agree.
pub fn embedded_ssc_certificate(
    metric: &dyn Metric,
    points: &[Point],
    dirs_per_point: usize,
    rng: &mut ChaCha8Rng,
) -> PropResult {
    let dim = metric.dim();
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    let mut stable = true;
    for x in points {
        let g = match metric.value(x) {
            Ok(g) => g,
            Err(_) => continue,
        };
        for _ in 0..dirs_per_point {
            let h = random_direction(dim, rng);
            let h_norm = (&g * &h).dot(&h).sqrt();
            if !(h_norm > 0.0) {
                continue;
            }
            let h = h / h_norm;
            let dg = match metric.deriv(x, &h) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let mut readings = [0.0f64; 2];
            let mut ok = true;
            for (k, eps) in [1e-8, 1e-10].into_iter().enumerate() {
                let reg = &g + eps * DMatrix::identity(dim, dim);
                match Cholesky::new(reg) {
                    Some(chol) => match whiten(&chol, &dg) {
                        Some(w) => readings[k] = w.norm(),
                        None => ok = false,
                    },
                    None => ok = false,
                }
            }
            if !ok {
                continue;
            }
            samples += 1;
            if (readings[0] - readings[1]).abs() > 1e-3 * readings[0].max(1.0) {
                stable = false;
            }
            worst = worst.max(readings[1] / 2.0);
        }
    }
    let mut res = PropResult::new("embedded_ssc", worst, 1.0 + 1e-6, samples);
    res.pass = res.pass && stable;
    res
}

/// Polytope chord certificate: random `y` with `||A_x (y - x)||_inf <= 1`
/// must satisfy `||y - x||^2_g <= nu_bar`.
pub fn polytope_symmetry_certificate(
    metric: &dyn Metric,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    points: &[Point],
    dirs_per_point: usize,
    rng: &mut ChaCha8Rng,
) -> PropResult {
    let nu_bar = metric.amenability().nu_bar;
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for x in points {
        let st = match crate::linear::slack_state(a, b, x) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let g = match metric.value(x) {
            Ok(g) => g,
            Err(_) => continue,
        };
        for _ in 0..dirs_per_point {
            let v = random_direction(metric.dim(), rng);
            let scale = (&st.a_x * &v).amax();
            if scale <= 0.0 {
                continue;
            }
            // y - x on the boundary of the symmetrized body
            let v = v / scale;
            samples += 1;
            worst = worst.max((&g * &v).dot(&v));
        }
    }
    PropResult::new("symmetry_chord", worst, nu_bar + 1e-6, samples)
}
