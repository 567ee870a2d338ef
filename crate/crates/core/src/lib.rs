//! Exact finite-time control of a dephased quantum harmonic oscillator.
//!
//! The crate synthesizes trap-frequency and dephasing schedules that
//! drive the oscillator between two arbitrary thermal states in a
//! prescribed time, and verifies the synthesized protocols by three
//! independent propagation routes (Gaussian consistency ODEs, a
//! covariance-matrix oracle, and stochastic trajectory ensembles) plus
//! spectral and entropy diagnostics.

pub mod cli;
pub mod error;
pub(crate) mod dd;
pub mod diagnostics;
pub mod dynamics;
pub mod gaussian;
pub mod oracles;
pub mod protocol;
pub mod stochastic;

pub use error::{Error, Result};
pub use gaussian::{GaussianCoeffs, Moments, SpectralData, ThermalEndpoint};
pub use protocol::{Ansatz, ControlSchedule, Controls, ProtocolSpec, Smoothstep5};
pub use stochastic::{EnsembleStats, Unraveling, WavepacketState};
