//! Estimation of the Santha–Vazirani parameter ε of a bit source.
//!
//! The pipeline reads bits (or real samples, which are discretized), computes
//! the per-history deviations ε̃_h from overlapping substring counts, and
//! combines them with a weighted average into a single ε.
//!
//! ```
//! use svrand::bitio::BitSequence;
//! use svrand::combine::{combine, WeightScheme};
//! use svrand::estimator::profile;
//!
//! let bits = BitSequence::parse("0110100110010110").unwrap();
//! let p = profile(&bits, 2).unwrap();
//! let report = combine(&p, &WeightScheme::exponential(2)).unwrap();
//! assert!(report.final_epsilon <= 0.5);
//! ```

pub mod bitio;
pub mod cli;
pub mod combine;
pub mod discretize;
pub mod error;
pub mod estimator;
pub mod reference;
pub mod report;
pub mod svsim;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
