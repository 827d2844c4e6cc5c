//! Simulator for a quantum liquid state machine on an adiabatic quantum
//! computer.
//!
//! * [`statevec`]: dense state vectors, rotations, measurement.
//! * [`adiabatic`]: interpolated Hamiltonians, spectra, time evolution.
//! * [`reservoir`]: randomly coupled qubit reservoir, filters, separation and
//!   fading-memory certification.
//! * [`readout`]: ridge-regression readouts on filter outputs.
//! * [`hebbian`]: ART categorization and context-gated Hebbian updates.
//! * [`oracle`]: flag-register decision and counting with a brute-force check.
//! * [`cli`]: experiment orchestration behind the `qlsm` binary.

pub mod adiabatic;
pub mod cli;
pub mod error;
pub mod hashing;
pub mod hebbian;
pub mod io;
pub mod oracle;
pub mod readout;
pub mod reservoir;
pub mod statevec;

pub use error::{QlsmError, Result};
