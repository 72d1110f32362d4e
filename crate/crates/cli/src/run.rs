//! Shared run orchestration: reduction, cooling runs with optional chain
//! fan-out, and sample I/O.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;

use dikin::calculus::CompositeMetric;
use dikin::cooling::{CoolingConfig, Gcdw, Phase};
use dikin::metric::Metric;
use dikin::model::{project_sample, reduce_with, ReducedProblem};
use dikin::walk::LinearCost;

use crate::problem::{ProblemFile, SamplerFile};
use crate::report::{PartInfo, PhaseLine, RunMetadata};

pub type AnyError = Box<dyn std::error::Error + Send + Sync>;

/// Reduces the problem and assembles the composite metric plus the augmented
/// feasible hint.
pub fn build(file: &ProblemFile) -> Result<(ReducedProblem, CompositeMetric, LinearCost, DVector<f64>), AnyError> {
    let spec = file.to_spec()?;
    let red = reduce_with(spec, file.linear_metric_kind())?;
    let composite = red.composite()?;
    let hint_x = file
        .hint()
        .ok_or("problem file needs a feasible_hint for sampling")?;
    let hint = red.lift(&hint_x, 1.0)?;
    let cost = LinearCost { c: red.cost().clone() };
    Ok((red, composite, cost, hint))
}

/// Worker cap: `DIKIN_THREADS`, default 1.
pub fn worker_cap() -> usize {
    std::env::var("DIKIN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v >= 1)
        .unwrap_or(1)
}

pub struct SampleRun {
    /// Samples projected to the original space.
    pub samples: Vec<DVector<f64>>,
    pub metadata: RunMetadata,
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Init => "init",
        Phase::Anneal => "anneal",
        Phase::Accelerate => "accelerate",
        Phase::Target => "target",
    }
}

/// Runs the full schedule over `chains` independent chains (chain `i` uses
/// `seed + i`) and concatenates their outputs in chain order, so results do
/// not depend on the worker count.
pub fn run_gcdw(
    file: &ProblemFile,
    n: usize,
    chains: usize,
    sampler: &SamplerFile,
) -> Result<SampleRun, AnyError> {
    let started = Instant::now();
    let (red, composite, cost, hint) = build(file)?;
    let amen = composite.amenability();
    let cfg = CoolingConfig {
        inner_multiplier: sampler.inner_budget,
        r0: sampler.r0,
        laziness: sampler.laziness,
        epsilon: sampler.epsilon,
        seed: sampler.seed,
        thin: sampler.thin,
    };

    let chains = chains.max(1);
    let per_chain = n.div_ceil(chains);
    let workers = worker_cap().min(chains);

    let mut chain_outputs: Vec<Option<(Vec<DVector<f64>>, Vec<PhaseLine>, usize)>> = Vec::new();
    chain_outputs.resize_with(chains, || None);

    let run_one = |chain: usize| -> Result<(Vec<DVector<f64>>, Vec<PhaseLine>, usize), AnyError> {
        let gcdw = Gcdw::new(&composite, &cost, amen.nu);
        let mut cfg = cfg.clone();
        cfg.seed = cfg.seed.wrapping_add(chain as u64);
        let (aug, rep) = gcdw.sample(per_chain, &hint, &cfg, None)?;
        let mut out = Vec::with_capacity(aug.len());
        for y in &aug {
            out.push(project_sample(&red, y)?);
        }
        let trace = rep
            .trace
            .iter()
            .map(|r| PhaseLine {
                phase: phase_name(r.phase).into(),
                sigma_sq: r.sigma_sq,
                steps: r.steps,
                acceptance: r.acceptance,
            })
            .collect();
        Ok((out, trace, rep.total_steps))
    };

    if workers <= 1 {
        for (chain, slot) in chain_outputs.iter_mut().enumerate() {
            *slot = Some(run_one(chain)?);
        }
    } else {
        let results: Vec<Result<(usize, (Vec<DVector<f64>>, Vec<PhaseLine>, usize)), AnyError>> =
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for w in 0..workers {
                    let run_one = &run_one;
                    handles.push(scope.spawn(move || {
                        let mut local = Vec::new();
                        let mut chain = w;
                        while chain < chains {
                            match run_one(chain) {
                                Ok(v) => local.push(Ok((chain, v))),
                                Err(e) => local.push(Err(e)),
                            }
                            chain += workers;
                        }
                        local
                    }));
                }
                handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
            });
        for r in results {
            let (chain, v) = r?;
            chain_outputs[chain] = Some(v);
        }
    }

    let mut samples = Vec::with_capacity(per_chain * chains);
    let mut schedule = Vec::new();
    let mut total_steps = 0;
    for (chain, slot) in chain_outputs.into_iter().enumerate() {
        let (mut out, trace, steps) = slot.expect("chain not run");
        samples.append(&mut out);
        total_steps += steps;
        if chain == 0 {
            schedule = trace;
        }
    }
    samples.truncate(n);

    let parts = composite
        .parts()
        .iter()
        .map(|p| {
            let a = p.amenability();
            PartInfo { nu: a.nu, nu_bar: a.nu_bar, applied_scaling: a.applied_scaling }
        })
        .collect();

    let metadata = RunMetadata {
        seed: sampler.seed,
        chains,
        samples: samples.len(),
        original_dim: red.original_dim(),
        ambient_dim: red.ambient_dim(),
        nu: amen.nu,
        nu_bar: amen.nu_bar,
        prefactor: composite.prefactor(),
        parts,
        schedule,
        total_steps,
        runtime_ms: started.elapsed().as_millis(),
    };
    Ok(SampleRun { samples, metadata })
}

/// Writes samples one point per line: JSON arrays or CSV.
pub fn write_samples(
    out: &mut dyn Write,
    samples: &[DVector<f64>],
    format: &str,
) -> Result<(), AnyError> {
    match format {
        "jsonl" => {
            for s in samples {
                let row: Vec<f64> = s.iter().cloned().collect();
                serde_json::to_writer(&mut *out, &row)?;
                out.write_all(b"\n")?;
            }
        }
        "csv" => {
            for s in samples {
                let row: Vec<String> = s.iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{}", row.join(","))?;
            }
        }
        other => return Err(format!("unknown format {other}").into()),
    }
    Ok(())
}

/// Reads samples back from a JSONL or CSV file.
pub fn read_samples(path: &str) -> Result<Vec<DVector<f64>>, AnyError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = if line.starts_with('[') {
            serde_json::from_str(line).map_err(|e| format!("line {}: {e}", lineno + 1))?
        } else {
            line.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", lineno + 1))?
        };
        out.push(DVector::from_vec(row));
    }
    Ok(out)
}
