//! Controlled double-rephasing (CDR) photon echoes in a three-level atom.
//!
//! * [`analytic`]: closed-form stage states as functions of pulse areas.
//! * [`unitary`]: hard-pulse rotations and exact free evolution.
//! * [`ode`]: RK4 integration of the density-matrix equations for square pulses.
//! * [`ensemble`]: inhomogeneous ensembles, polarization traces, echo detection.
//! * [`area`]: pulse-area propagation through an absorber.
//! * [`sweep`] / [`seqfile`]: figure datasets, CSV output and sequence files.
//! * [`verify`]: the cross-validation suite run by `cdr-echo verify`.

pub mod analytic;
pub mod area;
pub mod ensemble;
pub mod error;
pub mod ode;
pub mod seqfile;
pub mod state;
pub mod sweep;
pub mod unitary;
pub mod verify;

pub use error::{Error, Result};
pub use state::{ground_state, AtomParams, Channel, DensityMatrix, Pulse, PulseSequence};
