//! Error types shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A shunt branch is driven exactly at its dressed series resonance,
    /// where the cell admittance diverges.
    #[error("shunt admittance pole: omega = {omega:.9e} rad/s is on resonance")]
    OnResonance { omega: f64 },

    /// No traveling-wave solution at this frequency.
    #[error(
        "omega = {omega:.9e} rad/s lies in a bandgap [{lo:.9e}, {hi:.9e}] rad/s"
    )]
    Bandgap { omega: f64, lo: f64, hi: f64 },

    /// The tuning residual does not change sign over the bracket.
    #[error(
        "untunable: delta-k does not change sign over knob bracket \
         [{lo:.9e}, {hi:.9e}] (delta_k = {f_lo:.6e} and {f_hi:.6e} rad/m)"
    )]
    Untunable { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// An operation was called outside its regime of validity.
    #[error("outside regime of validity: {0}")]
    Regime(String),

    #[error("state is not pure: purity = {purity}")]
    NotPure { purity: f64 },

    #[error("kernel is degenerate: dimension {dim}, steady state not unique")]
    DegenerateKernel { dim: usize },

    #[error("drift matrix is not Hurwitz: {0}")]
    Unstable(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("beam splitter network is not unitary: {0}")]
    NonUnitary(String),

    #[error("pump index {pump_index} on source {source_index} has no realizable frequency pair")]
    NoPairForPump { source_index: usize, pump_index: i64 },

    #[error("macronode interferometer would create a self-loop on vertex {vertex}")]
    SelfLoop { vertex: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("graph i/o: {0}")]
    GraphIo(String),
}

pub type Result<T> = std::result::Result<T, Error>;
