//! Simulation library for Josephson traveling-wave parametric amplifiers as
//! broadband squeezing sources, and for the dissipative state engineering
//! their output enables: dispersion-engineered gain and squeezing spectra,
//! loss degradation, two-qubit entanglement in a squeezed bath, and
//! continuous-variable cluster-state preparation by Gaussian Lindblad
//! dynamics.

pub mod amplifier;
pub mod cluster;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod linalg;
pub mod qubit_bath;

pub use error::{Error, Result};
