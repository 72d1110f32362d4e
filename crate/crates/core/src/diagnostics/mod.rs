//! Verification machinery: finite-difference probes, property certificates,
//! exact low-dimensional oracles, and sample statistics.

pub mod cert;
pub mod fd;
pub mod oracle;
pub mod stats;

pub use cert::{
    certify_barrier, embedded_ssc_certificate, polytope_symmetry_certificate, CertificateBlock,
    CertifyOptions, PropResult,
};
pub use fd::{fourth_directional_derivative, gradient_fd, metric_derivative_fd};
pub use oracle::{ball_walk, integrate, rejection_oracle, tv_samples_vs_density, BoundingBox};
pub use stats::{check_moments, effective_sample_size, histogram_tv, two_sample_ks, MomentCheck};
