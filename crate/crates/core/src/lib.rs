//! Simulation and pulse-sequence synthesis for two microwave resonators
//! coupled through one frequency-tunable qubit.
//!
//! The crate has three layers:
//! - linear-algebra plumbing: [`hilbert`], [`state`], [`operator`];
//! - the physics: [`params`], [`dispersive`], [`gates`], [`propagate`];
//! - the planner: [`compiler`] turns a target joint cavity state into a
//!   gate sequence and then a hardware-style [`schedule`].
//!
//! Conventions used throughout: frequencies are angular (rad/s), times
//! are seconds, and file boundaries convert to GHz/MHz/ns. Basis states
//! are |q, n_a, n_b> with the qubit index slowest.

pub mod compiler;
pub mod dispersive;
pub mod error;
pub mod gates;
pub mod hilbert;
pub mod operator;
pub mod params;
pub mod propagate;
pub mod schedule;
pub mod state;

/// Complex double, the amplitude scalar for every state and operator.
pub type C64 = num_complex::Complex64;

/// Crate version, exposed for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{CoreError, Result};
pub use hilbert::{BasisLabel, HilbertSpace};
pub use params::SystemParams;
pub use state::{AmplitudeRecord, StateVector};
