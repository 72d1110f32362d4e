//! Named barrier instances for the certificate suite, each with a sampler
//! for random strictly interior points.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dikin::diagnostics::{certify_barrier, polytope_symmetry_certificate, CertifyOptions};
use dikin::linear::{LewisMetric, LogBarrier, VaidyaMetric};
use dikin::metric::Metric;
use dikin::psd::{LogDetBarrier, SvecCodec};
use dikin::structured::{
    ellipsoid_barrier, entropy_barrier, exp_epigraph_barrier, gaussian_epigraph_barrier,
    log_epigraph_barrier, power_barrier, soc_barrier,
};

use crate::report::{AscLine, CertLine, CertifyReport};
use crate::run::AnyError;

pub const BARRIER_NAMES: &[&str] = &[
    "log",
    "vaidya",
    "lewis",
    "ellipsoid",
    "gaussian",
    "soc",
    "psd",
    "psd-unscaled",
    "entropy",
    "power",
    "log-epigraph",
    "exp-epigraph",
];

fn random_polytope(m: usize, d: usize, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>) {
    // rows normalized, origin strictly inside with slack in [0.5, 1.5]
    let mut a = DMatrix::zeros(m, d);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let mut row = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0f64));
        if row.norm() < 1e-6 {
            row[0] = 1.0;
        }
        row /= row.norm();
        for j in 0..d {
            a[(i, j)] = row[j];
        }
        b[i] = -rng.gen_range(0.5..1.5);
    }
    (a, b)
}

fn polytope_points(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let d = a.ncols();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = DVector::from_fn(d, |_, _| rng.gen_range(-0.4..0.4));
        let s = a * &x - b;
        if s.iter().all(|v| *v > 0.05) {
            out.push(x);
        }
    }
    out
}

fn psd_points(n_side: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let codec = SvecCodec::new(n_side);
    (0..count)
        .map(|_| {
            let a = DMatrix::from_fn(n_side, n_side, |_, _| rng.gen_range(-1.0..1.0));
            let x = &a * a.transpose() + 0.3 * DMatrix::identity(n_side, n_side);
            codec.svec(&x)
        })
        .collect()
}

/// Builds the named barrier and its interior-point sample, then runs the
/// certificate suite.
pub fn certify(name: &str, n_points: usize, n_dirs: usize, seed: u64, with_asc: bool) -> Result<CertifyReport, AnyError> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opts = CertifyOptions { dirs_per_point: n_dirs, ..CertifyOptions::default() };
    if with_asc {
        opts.asc_radii = vec![0.1, 0.05, 0.01];
    }

    let (metric, points, polytope): (Box<dyn Metric>, Vec<DVector<f64>>, Option<(DMatrix<f64>, DVector<f64>)>) =
        match name {
            "log" => {
                let (a, b) = random_polytope(8, 3, &mut rng);
                let pts = polytope_points(&a, &b, n_points, &mut rng);
                (Box::new(LogBarrier::new(a.clone(), b.clone())?), pts, Some((a, b)))
            }
            "vaidya" => {
                let (a, b) = random_polytope(10, 3, &mut rng);
                let pts = polytope_points(&a, &b, n_points, &mut rng);
                // the Vaidya metric is an O(1)-approximation of its barrier
                // Hessian, not the Hessian itself
                opts.hessian_is_metric = false;
                (Box::new(VaidyaMetric::new(a.clone(), b.clone())?), pts, Some((a, b)))
            }
            "lewis" => {
                let (a, b) = random_polytope(10, 3, &mut rng);
                let pts = polytope_points(&a, &b, n_points, &mut rng);
                opts.hessian_is_metric = false;
                (Box::new(LewisMetric::new(a.clone(), b.clone())?), pts, Some((a, b)))
            }
            "ellipsoid" => {
                let q = 2.0 * DMatrix::identity(3, 3);
                let m = ellipsoid_barrier(q, DVector::zeros(3), -1.0)?;
                let pts = (0..n_points)
                    .map(|_| {
                        let dir = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0f64));
                        let r: f64 = rng.gen_range(0.0..0.9f64);
                        r / dir.norm() * dir
                    })
                    .collect();
                (Box::new(m), pts, None)
            }
            "gaussian" => {
                let m = gaussian_epigraph_barrier(DMatrix::identity(2, 2), DVector::zeros(2))?;
                let pts = (0..n_points)
                    .map(|_| {
                        let x = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0f64));
                        let t = 0.5 * x.norm_squared() + rng.gen_range(0.2..2.0);
                        DVector::from_row_slice(&[x[0], x[1], t])
                    })
                    .collect();
                (Box::new(m), pts, None)
            }
            "soc" => {
                let m = soc_barrier(DMatrix::identity(2, 2), DVector::zeros(2))?;
                let pts = (0..n_points)
                    .map(|_| {
                        let x = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0f64));
                        let t = x.norm() + rng.gen_range(0.1..2.0);
                        DVector::from_row_slice(&[x[0], x[1], t])
                    })
                    .collect();
                (Box::new(m), pts, None)
            }
            "psd" => (Box::new(LogDetBarrier::standalone(3)), psd_points(3, n_points, &mut rng), None),
            "psd-unscaled" => {
                // negative control: without the n-scaling SSC must fail
                (Box::new(LogDetBarrier::with_scaling(3, 1.0)), psd_points(3, n_points, &mut rng), None)
            }
            "entropy" | "power" | "log-epigraph" | "exp-epigraph" => {
                let d = 2;
                let (m, draw): (Box<dyn Metric>, Box<dyn Fn(&mut ChaCha8Rng) -> (f64, f64)>) = match name {
                    "entropy" => (
                        Box::new(entropy_barrier(d)?),
                        Box::new(|rng: &mut ChaCha8Rng| {
                            let x = rng.gen_range(0.2..2.0f64);
                            (x, x * x.ln() + rng.gen_range(0.2..1.5))
                        }),
                    ),
                    "power" => (
                        Box::new(power_barrier(d, 3.0)?),
                        Box::new(|rng: &mut ChaCha8Rng| {
                            let x = rng.gen_range(-0.8..0.8f64);
                            (x, x.abs().powf(3.0) + rng.gen_range(0.2..1.5))
                        }),
                    ),
                    "log-epigraph" => (
                        Box::new(log_epigraph_barrier(d)?),
                        Box::new(|rng: &mut ChaCha8Rng| {
                            let x = rng.gen_range(0.2..2.0f64);
                            (x, -x.ln() + rng.gen_range(0.2..1.5))
                        }),
                    ),
                    _ => (
                        Box::new(exp_epigraph_barrier(d)?),
                        Box::new(|rng: &mut ChaCha8Rng| {
                            let x = rng.gen_range(-1.0..0.5f64);
                            (x, x.exp() + rng.gen_range(0.2..1.5))
                        }),
                    ),
                };
                let pts = (0..n_points)
                    .map(|_| {
                        let (x1, t1) = draw(&mut rng);
                        let (x2, t2) = draw(&mut rng);
                        DVector::from_row_slice(&[x1, x2, t1, t2])
                    })
                    .collect();
                (m, pts, None)
            }
            other => return Err(format!("unknown barrier {other}; known: {BARRIER_NAMES:?}").into()),
        };

    let block = certify_barrier(metric.as_ref(), &points, &opts, &mut rng);
    let mut lines: Vec<CertLine> = block
        .results
        .iter()
        .map(|r| CertLine {
            property: r.name.clone(),
            pass: r.pass,
            worst: r.worst,
            bound: r.bound,
            samples: r.samples,
        })
        .collect();
    if let Some((a, b)) = polytope {
        let sym = polytope_symmetry_certificate(metric.as_ref(), &a, &b, &points, n_dirs, &mut rng);
        lines.push(CertLine {
            property: sym.name,
            pass: sym.pass,
            worst: sym.worst,
            bound: sym.bound,
            samples: sym.samples,
        });
    }
    let amen = metric.amenability();
    let all_pass = lines.iter().all(|l| l.pass);
    Ok(CertifyReport {
        barrier: name.into(),
        nu: amen.nu,
        nu_bar: amen.nu_bar,
        applied_scaling: amen.applied_scaling,
        lines,
        asc: block
            .asc
            .iter()
            .map(|a| AscLine {
                radius: a.radius,
                epsilon: a.epsilon,
                failure_rate: a.failure_rate,
                draws: a.draws,
            })
            .collect(),
        unverified: block.unverified.clone(),
        all_pass,
    })
}
