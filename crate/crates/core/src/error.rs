use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("key `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("config is not valid structured text: {0}")]
    Parse(String),

    #[error("unknown preset `{0}` (expected one of aligo, aligo-equal, msi, msi-equal)")]
    UnknownPreset(String),

    #[error("singular denominator in {context} (|value| = {magnitude:e})")]
    Singular {
        context: &'static str,
        magnitude: f64,
    },

    #[error("symmetric and antisymmetric modes are identical; coupling ratio is undefined")]
    DegenerateModes,

    #[error("1 + Δ² lies on the branch cut of the square root (arg = {0})")]
    BranchCut(f64),

    #[error("characteristic polynomial coefficient c{index} has imaginary residue {residue:e}")]
    NonRealCoefficient { index: usize, residue: f64 },

    #[error("root iteration did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        best: Vec<Complex64>,
    },

    #[error("spring parameter p² = {0} is negative (overcritical pump)")]
    ComplexP(f64),

    #[error("spring parameter p = {0} is at or below the double-resonance threshold")]
    DoubleResonance(f64),

    #[error("p = {0} lies outside the open interval (0, 1)")]
    POutOfRange(f64),

    #[error("stability verdict is the same at both ends of [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error(
        "could not adjust delta_w to reach the requested offset; set delta_w_hz manually ({0})"
    )]
    Steering(String),

    #[error("{0}")]
    Topology(String),
}
