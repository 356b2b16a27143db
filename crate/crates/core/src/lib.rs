//! Nonconvex low-rank plus sparse decomposition of video-like data.
//!
//! A data matrix `D` (one vectorised frame per column) is split as
//! `D ≈ A(L + S)` where every column of `L` is the same bounded frame and
//! `S` is sparse under a nonconvex penalty. The main solver is ADMM with a
//! general dual step-size ([`admm`]); [`palm`] provides a baseline.
//!
//! ```
//! use ncxadmm::{AdmmConfig, ConstraintSet, LinearMap, Mat, Penalty, PenaltyKind, Problem};
//!
//! let d = Mat::from_fn(4, 6, |i, j| if i == j { 1.0 } else { 0.2 });
//! let pen = Penalty::new(PenaltyKind::Fraction { alpha: 1.0 }, 0.1).unwrap();
//! let problem = Problem::new(d, LinearMap::Identity, ConstraintSet::default(), pen).unwrap();
//! let init = problem.initialize(1.0).unwrap();
//! let report = ncxadmm::admm::solve(&problem, &AdmmConfig::default(), &init).unwrap();
//! assert!(report.converged);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod bench;
pub mod error;
pub mod io;
pub mod operators;
pub mod palm;
pub mod problem;
pub mod regularizers;
pub mod report;

pub use admm::{AdmmConfig, BetaPolicy, HeuristicParams};
pub use error::{Error, Result};
pub use operators::{FrameBlur, LinearMap, Mat};
pub use palm::PalmConfig;
pub use problem::{Problem, SolverState};
pub use regularizers::{ConstraintSet, Penalty, PenaltyKind};
pub use report::{write_trace_csv, IterRecord, RunReport};
