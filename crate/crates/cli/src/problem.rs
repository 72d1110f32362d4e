//! Problem-file schema: UTF-8 JSON with row-major matrices. Unknown fields
//! are rejected so typos surface as parse errors instead of silent defaults.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use dikin::model::{ConstraintTerm, LinearMetricKind, PotentialTerm, ProblemSpec};

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error in {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Row-major matrix.
pub type Rows = Vec<Vec<f64>>;

fn to_matrix(rows: &Rows, what: &str) -> Result<DMatrix<f64>, ProblemError> {
    if rows.is_empty() {
        return Err(ProblemError::Invalid(format!("{what}: empty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ProblemError::Invalid(format!("{what}: ragged rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintFile {
    Linear { a: Rows, b: Vec<f64> },
    Ellipsoid { q: Rows, p: Vec<f64>, l: f64 },
    PsdCone { side: usize, #[serde(default)] offset: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialFile {
    Linear { c: Vec<f64> },
    Quadratic { sigma: Rows, mu: Vec<f64> },
    Norm { sigma: Rows, mu: Vec<f64> },
    Entropy,
    Power { p: f64 },
    Log,
    Exp,
    LogDet { side: usize, #[serde(default)] offset: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum LinearMetricFile {
    Log,
    Vaidya,
    Lewis,
}

impl Default for LinearMetricFile {
    fn default() -> Self {
        LinearMetricFile::Log
    }
}

fn default_inner_budget() -> usize {
    50
}

fn default_r0() -> f64 {
    0.3
}

fn default_laziness() -> f64 {
    0.5
}

fn default_epsilon() -> f64 {
    0.01
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplerFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_laziness")]
    pub laziness: f64,
    #[serde(default = "default_inner_budget")]
    pub inner_budget: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// 0 means "ambient dimension".
    #[serde(default)]
    pub thin: usize,
    #[serde(default)]
    pub linear_metric: LinearMetricFile,
}

impl Default for SamplerFile {
    fn default() -> Self {
        Self {
            seed: 0,
            r0: default_r0(),
            laziness: default_laziness(),
            inner_budget: default_inner_budget(),
            epsilon: default_epsilon(),
            thin: 0,
            linear_metric: LinearMetricFile::Log,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxFile {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// The on-disk problem description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub dimension: usize,
    #[serde(default)]
    pub constraints: Vec<ConstraintFile>,
    #[serde(default)]
    pub potentials: Vec<PotentialFile>,
    #[serde(default)]
    pub sampler: Option<SamplerFile>,
    /// Strictly feasible point in the original space.
    #[serde(default)]
    pub feasible_hint: Option<Vec<f64>>,
    /// Bounding box for the rejection oracle (dimension <= 3 only).
    #[serde(default)]
    pub bounding_box: Option<BoxFile>,
}

impl ProblemFile {
    pub fn to_spec(&self) -> Result<ProblemSpec, ProblemError> {
        let d = self.dimension;
        if d == 0 {
            return Err(ProblemError::Invalid("dimension must be positive".into()));
        }
        let mut constraints = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let term = match c {
                ConstraintFile::Linear { a, b } => {
                    let a = to_matrix(a, &format!("constraint {i}"))?;
                    if a.ncols() != d || a.nrows() != b.len() {
                        return Err(ProblemError::Invalid(format!(
                            "constraint {i}: A is {}x{}, b has {}, dimension is {d}",
                            a.nrows(),
                            a.ncols(),
                            b.len()
                        )));
                    }
                    ConstraintTerm::Linear { a, b: DVector::from_vec(b.clone()) }
                }
                ConstraintFile::Ellipsoid { q, p, l } => {
                    let q = to_matrix(q, &format!("constraint {i}"))?;
                    if q.nrows() != d || p.len() != d {
                        return Err(ProblemError::Invalid(format!(
                            "constraint {i}: Q/p dimensions do not match {d}"
                        )));
                    }
                    ConstraintTerm::Ellipsoid { q, p: DVector::from_vec(p.clone()), l: *l }
                }
                ConstraintFile::PsdCone { side, offset } => {
                    let need = side * (side + 1) / 2;
                    if offset + need > d {
                        return Err(ProblemError::Invalid(format!(
                            "constraint {i}: PSD block of side {side} needs {need} coordinates \
                             from offset {offset}, dimension is {d}"
                        )));
                    }
                    ConstraintTerm::PsdCone { side: *side, offset: *offset }
                }
            };
            constraints.push(term);
        }
        let mut potentials = Vec::new();
        for (i, p) in self.potentials.iter().enumerate() {
            let term = match p {
                PotentialFile::Linear { c } => {
                    if c.len() != d {
                        return Err(ProblemError::Invalid(format!("potential {i}: c has wrong length")));
                    }
                    PotentialTerm::Linear { c: DVector::from_vec(c.clone()) }
                }
                PotentialFile::Quadratic { sigma, mu } => PotentialTerm::Quadratic {
                    sigma: to_matrix(sigma, &format!("potential {i}"))?,
                    mu: DVector::from_vec(mu.clone()),
                },
                PotentialFile::Norm { sigma, mu } => PotentialTerm::Norm {
                    sigma: to_matrix(sigma, &format!("potential {i}"))?,
                    mu: DVector::from_vec(mu.clone()),
                },
                PotentialFile::Entropy => PotentialTerm::Entropy,
                PotentialFile::Power { p } => PotentialTerm::Power { p: *p },
                PotentialFile::Log => PotentialTerm::Log,
                PotentialFile::Exp => PotentialTerm::Exp,
                PotentialFile::LogDet { side, offset } => {
                    PotentialTerm::LogDet { side: *side, offset: *offset }
                }
            };
            potentials.push(term);
        }
        Ok(ProblemSpec::new(d, constraints, potentials))
    }

    pub fn sampler(&self) -> SamplerFile {
        self.sampler.clone().unwrap_or_default()
    }

    pub fn linear_metric_kind(&self) -> LinearMetricKind {
        match self.sampler().linear_metric {
            LinearMetricFile::Log => LinearMetricKind::Log,
            LinearMetricFile::Vaidya => LinearMetricKind::Vaidya,
            LinearMetricFile::Lewis => LinearMetricKind::Lewis,
        }
    }

    pub fn hint(&self) -> Option<DVector<f64>> {
        self.feasible_hint.as_ref().map(|h| DVector::from_vec(h.clone()))
    }
}

/// Loads and validates a problem file.
pub fn load_problem(path: &str) -> Result<(ProblemFile, ProblemSpec), ProblemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ProblemError::Io { path: path.into(), source })?;
    let file: ProblemFile = serde_json::from_str(&text)
        .map_err(|source| ProblemError::Parse { path: path.into(), source })?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

/// Built-in presets covering the worked example assemblies.
pub fn preset(name: &str) -> Option<ProblemFile> {
    let unit_box = |d: usize| -> ConstraintFile {
        let mut a = DMatrix::zeros(2 * d, d);
        let mut b = vec![0.0; 2 * d];
        for i in 0..d {
            a[(2 * i, i)] = 1.0;
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i] = 0.0;
            b[2 * i + 1] = -1.0;
        }
        ConstraintFile::Linear { a: to_rows(&a), b }
    };
    match name {
        "uniform-box" => Some(ProblemFile {
            version: 1,
            dimension: 2,
            constraints: vec![unit_box(2)],
            potentials: vec![],
            sampler: Some(SamplerFile::default()),
            feasible_hint: Some(vec![0.5, 0.5]),
            bounding_box: Some(BoxFile { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }),
        }),
        "exponential-box" => Some(ProblemFile {
            version: 1,
            dimension: 2,
            constraints: vec![{
                let a = DMatrix::from_row_slice(
                    4,
                    2,
                    &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0],
                );
                ConstraintFile::Linear { a: to_rows(&a), b: vec![0.0, -5.0, 0.0, -5.0] }
            }],
            potentials: vec![PotentialFile::Linear { c: vec![1.0, 1.0] }],
            sampler: Some(SamplerFile::default()),
            feasible_hint: Some(vec![1.0, 1.0]),
            bounding_box: Some(BoxFile { lo: vec![0.0, 0.0], hi: vec![5.0, 5.0] }),
        }),
        // Gaussian potential over a polytope: the 2 (phi_log + (d+1) phi_Gauss)
        // assembly on (x, t)
        "gaussian-polytope" => Some(ProblemFile {
            version: 1,
            dimension: 2,
            constraints: vec![unit_box(2)],
            potentials: vec![PotentialFile::Quadratic {
                sigma: vec![vec![4.0, 0.0], vec![0.0, 4.0]],
                mu: vec![0.25, 0.25],
            }],
            sampler: Some(SamplerFile::default()),
            feasible_hint: Some(vec![0.5, 0.5]),
            bounding_box: Some(BoxFile { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }),
        }),
        "gaussian-interval" => Some(ProblemFile {
            version: 1,
            dimension: 1,
            constraints: vec![{
                let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
                ConstraintFile::Linear { a: to_rows(&a), b: vec![0.0, -2.0] }
            }],
            potentials: vec![PotentialFile::Quadratic { sigma: vec![vec![9.0]], mu: vec![0.5] }],
            sampler: Some(SamplerFile::default()),
            feasible_hint: Some(vec![0.5]),
            bounding_box: Some(BoxFile { lo: vec![0.0], hi: vec![2.0] }),
        }),
        // uniform over {X >= 0, tr X <= 1} with n = 2 in svec coordinates
        "psd-trace" => Some(ProblemFile {
            version: 1,
            dimension: 3,
            constraints: vec![
                ConstraintFile::Linear { a: vec![vec![-1.0, 0.0, -1.0]], b: vec![-1.0] },
                ConstraintFile::PsdCone { side: 2, offset: 0 },
            ],
            potentials: vec![],
            sampler: Some(SamplerFile::default()),
            feasible_hint: Some(vec![0.25, 0.0, 0.25]),
            bounding_box: Some(BoxFile { lo: vec![0.0, -0.5, 0.0], hi: vec![1.0, 0.5, 1.0] }),
        }),
        "entropy-interval" => Some(ProblemFile {
            version: 1,
            dimension: 1,
            constraints: vec![{
                let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
                ConstraintFile::Linear { a: to_rows(&a), b: vec![0.1, -3.0] }
            }],
            potentials: vec![PotentialFile::Entropy],
            sampler: Some(SamplerFile::default()),
            feasible_hint: Some(vec![1.0]),
            bounding_box: Some(BoxFile { lo: vec![0.1], hi: vec![3.0] }),
        }),
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "uniform-box",
    "exponential-box",
    "gaussian-polytope",
    "gaussian-interval",
    "psd-trace",
    "entropy-interval",
];
