//! Command-line front end: problem ingestion, sampling runs, barrier
//! certification, oracle comparison, and a small benchmark table.

mod certify;
mod problem;
mod report;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dikin::diagnostics::{self, BoundingBox};
use dikin::walk::{DikinWalk, LinearCost, WalkConfig};

use problem::{load_problem, preset, PRESET_NAMES};
use report::{CompareReport, MomentLine};
use run::{build, read_samples, run_gcdw, write_samples, AnyError};

#[derive(Parser)]
#[command(name = "dikin", version, about = "Dikin-walk sampler for structured logconcave distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SamplerOverrides {
    /// Walk radius constant r0.
    #[arg(long)]
    r: Option<f64>,
    /// Laziness (0 or 0.5).
    #[arg(long)]
    lazy: Option<f64>,
    /// Inner walk budget per schedule update, times the ambient dimension.
    #[arg(long)]
    inner_budget: Option<usize>,
}

impl SamplerOverrides {
    fn apply(&self, s: &mut problem::SamplerFile) {
        if let Some(r) = self.r {
            s.r0 = r;
        }
        if let Some(l) = self.lazy {
            s.laziness = l;
        }
        if let Some(b) = self.inner_budget {
            s.inner_budget = b;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full cooling schedule and write samples.
    Sample {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[command(flatten)]
        overrides: SamplerOverrides,
        /// Output path; stdout when omitted. Metadata goes to `<out>.meta.json`.
        #[arg(long)]
        out: Option<String>,
        #[arg(long, default_value = "jsonl")]
        format: String,
    },
    /// Raw Dikin walk from a supplied start (no schedule).
    Walk {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        n: usize,
        /// Comma-separated start point in the original space.
        #[arg(long)]
        start: String,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        overrides: SamplerOverrides,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, default_value = "jsonl")]
        format: String,
    },
    /// Run property certificates for a named barrier.
    Certify {
        /// One of: log, vaidya, lewis, ellipsoid, gaussian, soc, psd,
        /// psd-unscaled, entropy, power, log-epigraph, exp-epigraph.
        #[arg(long)]
        barrier: String,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        dirs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also probe average self-concordance on the radius grid.
        #[arg(long)]
        asc: bool,
    },
    /// Compare a sample file against the exact rejection oracle.
    Compare {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        samples: String,
        #[arg(long, default_value_t = 100_000)]
        oracle_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        bins: usize,
    },
    /// Acceptance/ESS versus dimension for a constraint family.
    Bench {
        #[arg(long, default_value = "polytope")]
        family: String,
        /// Dimension range, e.g. 2..8 (inclusive).
        #[arg(long, default_value = "2..8")]
        dims: String,
        #[arg(long, default_value_t = 20_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
        /// Also render the acceptance curve as an SVG line chart.
        #[arg(long)]
        svg: Option<String>,
    },
    /// Write a built-in preset problem file.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn open_out(path: &Option<String>) -> Result<Box<dyn Write>, AnyError> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn dispatch(cmd: Command) -> Result<(), AnyError> {
    match cmd {
        Command::Sample { problem, n, seed, chains, overrides, out, format } => {
            let (file, _spec) = load_problem(&problem)?;
            let mut sampler = file.sampler();
            if let Some(s) = seed {
                sampler.seed = s;
            }
            overrides.apply(&mut sampler);
            let run = run_gcdw(&file, n, chains, &sampler)?;
            let mut w = open_out(&out)?;
            write_samples(&mut w, &run.samples, &format)?;
            w.flush()?;
            let meta = serde_json::to_string_pretty(&run.metadata)?;
            match &out {
                Some(p) => std::fs::write(format!("{p}.meta.json"), meta)?,
                None => eprintln!("{meta}"),
            }
            Ok(())
        }
        Command::Walk { problem, n, start, seed, overrides, out, format } => {
            let (file, _spec) = load_problem(&problem)?;
            let mut sampler = file.sampler();
            if let Some(s) = seed {
                sampler.seed = s;
            }
            overrides.apply(&mut sampler);
            let (red, composite, cost, _) = build(&file)?;
            let x: Vec<f64> = start
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()?;
            let x0 = red.lift(&DVector::from_vec(x), 1.0)?;
            let cfg = WalkConfig::with_large_radius(sampler.r0, n, sampler.seed)?.lazy(sampler.laziness);
            let mut walk = DikinWalk::new(&composite, &cost, x0, cfg)?;
            let mut projected = Vec::with_capacity(n);
            walk.run_with_sink(|y| {
                projected.push(DVector::from_fn(red.original_dim(), |i, _| y[i]));
            });
            let mut w = open_out(&out)?;
            write_samples(&mut w, &projected, &format)?;
            w.flush()?;
            eprintln!(
                "acceptance rate {:.4} over {} proposals",
                walk.stats().acceptance_rate(),
                walk.stats().proposed
            );
            Ok(())
        }
        Command::Certify { barrier, n, dirs, seed, asc } => {
            let rep = certify::certify(&barrier, n, dirs, seed, asc)?;
            println!(
                "barrier {} (nu = {:.3}, nu_bar = {:.3}, applied scaling = {:.3})",
                rep.barrier, rep.nu, rep.nu_bar, rep.applied_scaling
            );
            println!("{:<24} {:>6} {:>14} {:>14} {:>8}", "property", "pass", "worst", "bound", "n");
            for l in &rep.lines {
                println!(
                    "{:<24} {:>6} {:>14.6e} {:>14.6e} {:>8}",
                    l.property,
                    if l.pass { "PASS" } else { "FAIL" },
                    l.worst,
                    l.bound,
                    l.samples
                );
            }
            for a in &rep.asc {
                println!(
                    "asc r={:<6} eps={:<5} failure rate {:.4} over {} draws",
                    a.radius, a.epsilon, a.failure_rate, a.draws
                );
            }
            for u in &rep.unverified {
                println!("unverified: {u}");
            }
            if rep.all_pass {
                Ok(())
            } else {
                Err("one or more certificates failed".into())
            }
        }
        Command::Compare { problem, samples, oracle_n, seed, bins } => {
            let (file, spec) = load_problem(&problem)?;
            let sample_points = read_samples(&samples)?;
            if sample_points.is_empty() {
                return Err("sample file is empty".into());
            }
            let bbox = file
                .bounding_box
                .as_ref()
                .ok_or("problem file needs a bounding_box for oracle comparison")?;
            let bbox = BoundingBox::new(
                DVector::from_vec(bbox.lo.clone()),
                DVector::from_vec(bbox.hi.clone()),
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let oracle = diagnostics::rejection_oracle(&spec, &bbox, oracle_n, &mut rng)?;
            let rep = compare_reports(&sample_points, &oracle, bins)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            if rep.flagged {
                Err("comparison flagged deviations beyond 3 SE".into())
            } else {
                Ok(())
            }
        }
        Command::Bench { family, dims, steps, seed, out, svg } => {
            if family != "polytope" {
                return Err(format!("unknown family {family}; only polytope ships").into());
            }
            let (lo, hi) = parse_range(&dims)?;
            let mut w = open_out(&out)?;
            writeln!(w, "dimension,acceptance,ess_per_1k_steps,seconds")?;
            let mut rows = Vec::new();
            for d in lo..=hi {
                let (acc, ess_rate, secs) = bench_polytope(d, steps, seed)?;
                writeln!(w, "{d},{acc:.4},{ess_rate:.2},{secs:.3}")?;
                rows.push((d, acc));
            }
            w.flush()?;
            if let Some(path) = svg {
                std::fs::write(&path, svg_line_chart(&rows, "acceptance vs dimension"))?;
            }
            Ok(())
        }
        Command::Preset { name, out } => {
            let p = preset(&name)
                .ok_or_else(|| format!("unknown preset {name}; known: {PRESET_NAMES:?}"))?;
            let text = serde_json::to_string_pretty(&p)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn parse_range(text: &str) -> Result<(usize, usize), AnyError> {
    let parts: Vec<&str> = text.split("..").collect();
    if parts.len() != 2 {
        return Err(format!("range must look like 2..8, got {text}").into());
    }
    let lo = parts[0].parse::<usize>()?;
    let hi = parts[1].parse::<usize>()?;
    if lo == 0 || hi < lo {
        return Err(format!("bad range {text}").into());
    }
    Ok((lo, hi))
}

fn compare_reports(
    samples: &[DVector<f64>],
    oracle: &[DVector<f64>],
    bins: usize,
) -> Result<CompareReport, AnyError> {
    let dim = oracle[0].len();
    if samples[0].len() != dim {
        return Err(format!(
            "sample dimension {} does not match problem dimension {dim}",
            samples[0].len()
        )
        .into());
    }
    let oracle_mean: Vec<f64> = (0..dim)
        .map(|c| oracle.iter().map(|s| s[c]).sum::<f64>() / oracle.len() as f64)
        .collect();
    let checks = diagnostics::check_moments(samples, &oracle_mean, None)?;
    let mut moments = Vec::new();
    let mut tv = Vec::new();
    let mut flagged = false;
    for c in 0..dim {
        let series: Vec<f64> = samples.iter().map(|s| s[c]).collect();
        let oracle_series: Vec<f64> = oracle.iter().map(|s| s[c]).collect();
        let (_, ovar) = diagnostics::stats::mean_var(&oracle_series);
        let ks = diagnostics::two_sample_ks(&series, &oracle_series)?;
        let check = &checks[c];
        if check.mean_sigmas > 3.0 {
            flagged = true;
        }
        moments.push(MomentLine {
            coord: c,
            mean: check.mean,
            oracle_mean: check.expected_mean,
            mean_sigmas: check.mean_sigmas,
            var: check.var,
            oracle_var: ovar,
            ess: check.ess,
            ks_statistic: ks.statistic,
            ks_p_value: ks.p_value,
        });
        if dim <= 2 {
            tv.push(diagnostics::histogram_tv(&series, &oracle_series, bins)?);
        }
    }
    Ok(CompareReport {
        samples: samples.len(),
        oracle_samples: oracle.len(),
        moments,
        tv,
        flagged,
    })
}

/// Minimal dependency-free SVG line chart for bench artifacts.
fn svg_line_chart(rows: &[(usize, f64)], title: &str) -> String {
    let (w, h, ml, mb) = (480.0, 320.0, 50.0, 40.0);
    let xmax = rows.iter().map(|r| r.0).max().unwrap_or(1) as f64;
    let xmin = rows.iter().map(|r| r.0).min().unwrap_or(0) as f64;
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin).max(1.0) * (w - ml - 20.0);
    let sy = |y: f64| (h - mb) - y.clamp(0.0, 1.0) * (h - mb - 20.0);
    let pts: Vec<String> =
        rows.iter().map(|(d, a)| format!("{:.1},{:.1}", sx(*d as f64), sy(*a))).collect();
    let mut ticks = String::new();
    for (d, a) in rows {
        ticks.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#205080\"/>\
             <text x=\"{:.1}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            sx(*d as f64),
            sy(*a),
            sx(*d as f64),
            h - mb + 16.0,
            d
        ));
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\
         <text x=\"{}\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">{title}</text>\
         <line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\
         <line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\
         <text x=\"14\" y=\"{}\" font-size=\"11\" transform=\"rotate(-90 14 {})\">acceptance</text>\
         <polyline fill=\"none\" stroke=\"#205080\" stroke-width=\"1.5\" points=\"{}\"/>{ticks}</svg>",
        w / 2.0,
        h - mb,
        w - 20.0,
        h - mb,
        h - mb,
        h / 2.0,
        h / 2.0,
        pts.join(" "),
    )
}

fn bench_polytope(d: usize, steps: usize, seed: u64) -> Result<(f64, f64, f64), AnyError> {
    use dikin::linear::LogBarrier;
    use nalgebra::DMatrix;
    let mut a = DMatrix::zeros(2 * d, d);
    let mut b = DVector::zeros(2 * d);
    for i in 0..d {
        a[(2 * i, i)] = 1.0;
        a[(2 * i + 1, i)] = -1.0;
        b[2 * i + 1] = -1.0;
    }
    let metric = LogBarrier::new(a, b)?;
    let cost = LinearCost { c: DVector::zeros(d) };
    let x0 = DVector::from_element(d, 0.5);
    let cfg = WalkConfig::new(0.3, steps, seed)?.lazy(0.0);
    let started = std::time::Instant::now();
    let mut walk = DikinWalk::new(&metric, &cost, x0, cfg)?;
    let mut first_coord = Vec::with_capacity(steps);
    walk.run_with_sink(|y| first_coord.push(y[0]));
    let secs = started.elapsed().as_secs_f64();
    let ess = diagnostics::effective_sample_size(&first_coord);
    Ok((walk.stats().acceptance_rate(), 1000.0 * ess / steps as f64, secs))
}
