//! Simulation and analysis of inversion-free, doubly rephased Raman echoes in
//! an inhomogeneously broadened three-level lambda ensemble.
//!
//! Units throughout: time in microseconds, Rabi frequencies and detunings as
//! angular frequencies in rad/us. Configuration files take ordinary
//! frequencies in kHz and convert with a factor of 2 pi.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod output;
pub mod presets;
pub mod pulses;
pub mod report;

pub use error::{Error, Result};
