//! Single-anchor UWB localization from channel impulse response (CIR) statistics.
//!
//! The crate classifies which of a set of reference areas produced a CIR (or a
//! window of consecutive CIRs). Four estimators are provided on top of
//! variational Bayesian Gaussian mixtures fitted per area:
//!
//! * per-bin independent scoring ([`classify::score_1d`]),
//! * joint multi-bin scoring ([`classify::score_md`]) with optional majority voting,
//! * the window similarity vector and its argmax ([`classify::predict_maxsim`]),
//! * an RBF support-vector classifier over similarity vectors ([`svc`]).
//!
//! [`simulate`] provides a seeded multipath CIR generator used as the data
//! source for tests and benchmarks, and [`harness`] ties everything together
//! into accuracy reports.

mod bundle;
pub mod classify;
pub mod error;
pub mod gmm;
pub mod harness;
pub mod model;
pub mod preprocess;
pub mod simulate;
pub mod svc;

pub use error::{Error, Result};
pub use model::{AreaId, CirSnapshot, Dataset, MagnitudeVector, SnapshotWindow};
