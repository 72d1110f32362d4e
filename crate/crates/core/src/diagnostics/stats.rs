//! Sample statistics for oracle comparisons: moments with autocorrelation-
//! aware standard errors, two-sample Kolmogorov-Smirnov, histogram TV, and
//! effective sample size.

use crate::error::{Error, Result};
use crate::model::Point;

/// Mean and (population) variance of a scalar series.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Integrated autocorrelation time by the initial-positive-sequence rule.
pub fn autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 8 {
        return 1.0;
    }
    let (mean, var) = mean_var(xs);
    if var <= 0.0 {
        return 1.0;
    }
    let max_lag = (n / 4).min(2000);
    let mut tau = 1.0;
    for lag in 1..max_lag {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (xs[i] - mean) * (xs[i + lag] - mean);
        }
        let rho = acc / ((n - lag) as f64 * var);
        if rho < 0.02 {
            break;
        }
        tau += 2.0 * rho;
    }
    tau.max(1.0)
}

/// Effective sample size `n / tau`.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    xs.len() as f64 / autocorrelation_time(xs)
}

/// Per-coordinate moment comparison against reference values, measured in
/// autocorrelation-adjusted standard errors.
#[derive(Clone, Debug)]
pub struct MomentCheck {
    pub coord: usize,
    pub mean: f64,
    pub expected_mean: f64,
    /// |mean - expected| in SE units.
    pub mean_sigmas: f64,
    pub var: f64,
    pub expected_var: Option<f64>,
    pub var_sigmas: Option<f64>,
    pub ess: f64,
}

/// Compares sample moments of chain output against expected values.
pub fn check_moments(
    samples: &[Point],
    expected_mean: &[f64],
    expected_var: Option<&[f64]>,
) -> Result<Vec<MomentCheck>> {
    if samples.is_empty() {
        return Err(Error::Statistics("no samples".into()));
    }
    let dim = samples[0].len();
    if expected_mean.len() != dim {
        return Err(Error::Statistics("expected mean has wrong dimension".into()));
    }
    let mut out = Vec::with_capacity(dim);
    for c in 0..dim {
        let series: Vec<f64> = samples.iter().map(|s| s[c]).collect();
        let (mean, var) = mean_var(&series);
        let ess = effective_sample_size(&series);
        let se_mean = (var / ess).sqrt();
        let mean_sigmas = if se_mean > 0.0 { (mean - expected_mean[c]).abs() / se_mean } else { 0.0 };
        let (exp_var, var_sigmas) = match expected_var {
            Some(ev) => {
                // variance of the sample variance approx 2 var^2 / ess for
                // near-Gaussian data; keep a distribution-free cushion
                let se_var = var * (2.0 / ess).sqrt() * 1.5;
                let sig = if se_var > 0.0 { (var - ev[c]).abs() / se_var } else { 0.0 };
                (Some(ev[c]), Some(sig))
            }
            None => (None, None),
        };
        out.push(MomentCheck {
            coord: c,
            mean,
            expected_mean: expected_mean[c],
            mean_sigmas,
            var,
            expected_var: exp_var,
            var_sigmas,
            ess,
        });
    }
    Ok(out)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 8 || b.len() < 8 {
        return Err(Error::Statistics("KS needs at least 8 samples per side".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    // Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)
    let mut p = 0.0;
    for k in 1..=100u32 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k as i32 - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    Ok(KsResult { statistic: d, p_value: p.clamp(0.0, 1.0) })
}

/// Histogram total variation between two 1D sample sets on a shared window.
pub fn histogram_tv(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() || bins == 0 {
        return Err(Error::Statistics("histogram TV needs samples and bins".into()));
    }
    let lo = a
        .iter()
        .chain(b.iter())
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = a
        .iter()
        .chain(b.iter())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Statistics("degenerate sample range".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut ca = vec![0.0; bins];
    let mut cb = vec![0.0; bins];
    for &x in a {
        ca[(((x - lo) / width) as usize).min(bins - 1)] += 1.0 / a.len() as f64;
    }
    for &x in b {
        cb[(((x - lo) / width) as usize).min(bins - 1)] += 1.0 / b.len() as f64;
    }
    Ok(0.5 * ca.iter().zip(cb.iter()).map(|(p, q)| (p - q).abs()).sum::<f64>())
}
