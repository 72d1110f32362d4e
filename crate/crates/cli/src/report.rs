//! Run metadata and diagnostics report records; everything a run emits is
//! auditable JSON.

use serde::Serialize;

/// Amenability data of one barrier part.
#[derive(Clone, Debug, Serialize)]
pub struct PartInfo {
    pub nu: f64,
    pub nu_bar: f64,
    pub applied_scaling: f64,
}

/// One schedule stage.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseLine {
    pub phase: String,
    pub sigma_sq: f64,
    pub steps: usize,
    pub acceptance: f64,
}

/// Sidecar metadata written next to every sample file.
#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub chains: usize,
    pub samples: usize,
    pub original_dim: usize,
    pub ambient_dim: usize,
    /// Combined parameters of the composite metric, prefactor included.
    pub nu: f64,
    pub nu_bar: f64,
    pub prefactor: f64,
    pub parts: Vec<PartInfo>,
    pub schedule: Vec<PhaseLine>,
    pub total_steps: usize,
    pub runtime_ms: u128,
}

/// One certificate line of the `certify` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct CertLine {
    pub property: String,
    pub pass: bool,
    pub worst: f64,
    pub bound: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AscLine {
    pub radius: f64,
    pub epsilon: f64,
    pub failure_rate: f64,
    pub draws: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub barrier: String,
    pub nu: f64,
    pub nu_bar: f64,
    pub applied_scaling: f64,
    pub lines: Vec<CertLine>,
    pub asc: Vec<AscLine>,
    pub unverified: Vec<String>,
    pub all_pass: bool,
}

/// Moment comparison line of the `compare` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct MomentLine {
    pub coord: usize,
    pub mean: f64,
    pub oracle_mean: f64,
    pub mean_sigmas: f64,
    pub var: f64,
    pub oracle_var: f64,
    pub ess: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub samples: usize,
    pub oracle_samples: usize,
    pub moments: Vec<MomentLine>,
    /// Histogram TV per coordinate (1-2D only).
    pub tv: Vec<f64>,
    pub flagged: bool,
}
