//! Adaptive piecewise Poly-Sinc collocation for linear ordinary differential equations.
//!
//! A solution is represented on each partition of the interval by the Lagrange
//! polynomial through that partition's Sinc points. The adaptive driver solves,
//! measures per-partition residual norms, marks partitions whose norm exceeds the
//! mean by a Geary-statistic multiple of the standard deviation, and splits them
//! at their own Sinc points.
//!
//! ```
//! use polysinc::{adaptive, problems};
//!
//! let entry = problems::builtin("relaxation").unwrap();
//! let run = adaptive::run(&entry.spec, &adaptive::Settings::new(2, 1e-6)).unwrap();
//! assert!(run.records.last().unwrap().mean <= 1e-6);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards, clippy::needless_range_loop)]

pub mod adaptive;
pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod quadrature;
pub mod sinc;
pub mod special;

pub use error::{Error, Result};
