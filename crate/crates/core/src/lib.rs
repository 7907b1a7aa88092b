//! Running maxima of Lévy processes observed at Poisson inspection epochs.
//!
//! The crate is organised bottom-up:
//!
//! - [`levy`]: model parameterisations, Laplace exponents and right-inverses.
//! - [`path`]: exact samplers for the running maximum and its last-argmax time
//!   over an exponential horizon.
//! - [`inspection`]: the Poisson-inspected random walk killed at rate `beta`.
//! - [`lindley`]: deterministic and killed Lindley recursions, two-dimensional
//!   recursion with last-argmax bookkeeping, and their fixed points.
//! - [`transforms`]: closed-form joint transforms and moments for spectrally
//!   one-sided models, plus the Frullani quadrature.
//! - [`stats`]: two-sample tests used to check equality in law.
//! - [`verify`]: named scenarios that wire the above into pass/fail reports.
//! - [`cli`]: the command-line front end used by the `inspected-levy` binary.

pub mod cli;
pub mod error;
pub mod inspection;
pub mod levy;
pub mod lindley;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use inspection::{InspectedWalk, InspectionParams};
pub use levy::{ExponentEval, LevyModel, ModelKind, Side};
pub use path::PathExtrema;
pub use rng::RngStream;
pub use stats::{EmpiricalSample, TestReport};
pub use transforms::MomentReport;
