//! Behavioral simulator for time-domain near-memory MAC macros.
//!
//! Models a 4-bit multiply-and-accumulate engine in which inputs are encoded
//! as pulse counts, weights as DAC currents, per-cell products as capacitor
//! voltages, and accumulation as propagation delay. Two accumulation
//! architectures live behind the [`arch::MacArchitecture`] trait and are
//! selected by name at runtime: a cascaded delay line digitized once at the
//! end of the chain, and per-cell counter readout summed digitally. The
//! [`metrics`] module scores both against an exact integer oracle and
//! produces linearity, quantization-noise, and energy reports.

pub mod analog;
pub mod arch;
pub mod cli;
pub mod config;
pub mod delay;
pub mod engine;
pub mod metrics;
pub mod pulsegen;
pub mod report;
pub mod rng;

pub use config::{CircuitParams, Code4, DelayModel, VectorOperands};
pub use engine::{MacEngine, MacReadout};
