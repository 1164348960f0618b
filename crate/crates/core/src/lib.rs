//! Recovery of jointly low-rank and bisparse symmetric matrices from linear
//! measurements.
//!
//! The crate is organised bottom-up:
//!
//! * [`symcore`]: symmetric matrices, bisupports, the rank-`r` projection.
//! * [`projections`]: exact, tail and head projections onto bisparse and
//!   jointly low-rank bisparse sets, and the hierarchical `(s, t)` projection.
//! * [`measurements`]: dense Gaussian, rank-one and factorized measurement
//!   maps with their adjoints, and Monte-Carlo restricted-isometry estimators.
//! * [`recovery`]: iterative hard thresholding with the exact projection,
//!   head/tail IHT, the sign-modified rank-one IHT, the two-step factorized
//!   pipeline and a brute-force decoder for small problems.
//! * [`bench`]: seeded phase-transition and RIP sweeps with CSV output.
//! * [`textio`] and [`cli`]: the plain-text formats and the command-line front end.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod combin;
pub mod error;
pub mod measurements;
pub mod projections;
pub mod recovery;
pub mod sampling;
pub mod symcore;
pub mod textio;

pub use error::{Error, Result};
pub use measurements::{MeasurementKind, MeasurementMap, RipEstimate, RipMode};
pub use projections::ProjectionOutcome;
pub use recovery::{HeadChoice, RecoveryConfig, RecoveryResult};
pub use symcore::{SupportSet, SymMatrix};
