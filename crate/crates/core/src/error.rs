use alloc::string::String;

/// Errors produced by the numerical kernels and physics builders.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel has dimension {dim}, expected a unique null direction")]
    DegenerateKernel { dim: usize },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("no unique steady state (g1 = 0 and nu * Gamma = 0)")]
    NoUniqueSteadyState,

    #[error("linear characteristic coefficient vanishes; current cumulants undefined")]
    DegenerateSpectrum,

    #[error("mean current {mean:e} is zero; TUR ratio undefined")]
    ZeroMeanCurrent { mean: f64 },

    #[error("no steady state detected within {collisions} collisions")]
    NotSaturated { collisions: u64 },

    #[error("counting-field stencil disagrees with its half-step refinement ({quantity}: {coarse:e} vs {fine:e})")]
    StencilMismatch {
        quantity: &'static str,
        coarse: f64,
        fine: f64,
    },

    #[error("cumulant has imaginary part {imag:e}")]
    ComplexCumulant { imag: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

pub type Result<T> = core::result::Result<T, Error>;
