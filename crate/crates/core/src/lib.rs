//! Sampling structured logconcave distributions over convex bodies with the
//! Dikin walk driven through a Gaussian-cooling schedule.
//!
//! The library is organized around a catalog of self-concordant barrier
//! metrics and a calculus for combining them:
//!
//! - [`model`]: problem descriptions and the epigraph reduction to
//!   exponential form.
//! - [`metric`]: the local-metric abstraction every barrier implements.
//! - [`linear`]: log, Vaidya and Lewis-weight metrics for `Ax >= b`.
//! - [`structured`]: ellipsoid, Gaussian-epigraph, second-order-cone and
//!   per-coordinate entropy/power/log/exp barriers.
//! - [`psd`]: the log-det barrier with svec machinery and the rank-one fast
//!   path for truncated PSD cones.
//! - [`calculus`]: scaling, embedding, summation and direct products.
//! - [`walk`]: the Metropolis-filtered Dikin walk.
//! - [`cooling`]: the four-phase annealing schedule.
//! - [`diagnostics`]: certificates, rejection oracles, quadrature, and
//!   sample statistics.
//!
//! # Example: uniform sampling over a triangle
//!
//! ```
//! use dikin::linear::LogBarrier;
//! use dikin::walk::{DikinWalk, UniformTarget, WalkConfig};
//! use nalgebra::{DMatrix, DVector};
//!
//! let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
//! let b = DVector::from_row_slice(&[0.0, 0.0, -1.0]);
//! let metric = LogBarrier::new(a, b).unwrap();
//! let cfg = WalkConfig::new(0.5, 1000, 7).unwrap();
//! let x0 = DVector::from_row_slice(&[0.25, 0.25]);
//! let mut walk = DikinWalk::new(&metric, &UniformTarget, x0, cfg).unwrap();
//! let trajectory = walk.run();
//! assert_eq!(trajectory.len(), 1000);
//! ```

pub mod calculus;
pub mod cooling;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod linear;
pub mod metric;
pub mod model;
pub mod psd;
pub mod structured;
pub mod walk;

pub use error::{Error, Result};
pub use metric::{Amenability, Metric};
pub use model::{reduce, ConstraintTerm, PotentialTerm, ProblemSpec, ReducedProblem};
