//! Geometric phases of a monitored qubit.
//!
//! A qubit is driven around the Bloch sphere not by a Hamiltonian but by a
//! sequence of generalized (weak) measurements with polarizers aligned along
//! a ring of directions. Each run of the protocol produces a readout sequence,
//! a quantum trajectory, and — once the trajectory is closed by a final strong
//! postselection — a Pancharatnam geometric phase. This crate computes those
//! phases three ways and exposes the topological structure behind them:
//!
//! * [`qubit`] — states, Bloch geometry, and the measurement (Kraus) operators
//!   of a null-type detector with strength `eta`.
//! * [`phase`] — Pancharatnam phases of state chains, exact amplitudes of
//!   readout sequences, and the closed-form quasicontinuous limit of the
//!   postselected protocol.
//! * [`ensemble`] — trajectory sampling with reproducible random streams,
//!   exhaustive readout enumeration, and the readout-averaged phase via a
//!   doubled-space transfer matrix.
//! * [`topology`] — phase unfolding in the polar angle, the Chern number of
//!   the measurement-induced phase (by endpoints and by Berry curvature), the
//!   critical measurement strength, and the averaged-phase analogues.
//! * [`interferometer`] — detector models and predicted output intensities of
//!   the Mach-Zehnder-style detection schemes.
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes through
//! [`libm`]. Everything is deterministic: random sampling is keyed by a master
//! seed and a realization index, never by global state.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ensemble;
pub mod error;
pub mod interferometer;
mod math;
pub mod phase;
pub mod qubit;
pub mod topology;

pub use error::{Error, Result};
pub use phase::{MeasurementProtocol, PhaseAmplitude};
pub use qubit::{BlochPoint, Direction, Operator2, QubitState, Readout};
