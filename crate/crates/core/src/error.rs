//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid Pauli text '{text}': {reason}")]
    InvalidPauliText { text: String, reason: String },

    #[error("qubit index {index} out of range for {total} qubits")]
    QubitOutOfRange { index: usize, total: usize },

    #[error("target and ancilla qubit indices collide at {index}")]
    IndexCollision { index: usize },

    #[error("identity string has no exponential gadget")]
    IdentityString,

    #[error("Lie closure exceeded maximum dimension (partial size {partial_size}, max {max})")]
    DimensionExceeded { partial_size: usize, max: usize },

    #[error("CSA hint contains non-commuting pair {a} / {b}")]
    NonCommutingHint { a: String, b: String },

    #[error("ITE layers {a} / {b} do not commute")]
    NonCommutingLayers { a: String, b: String },

    #[error("RBM ancilla {index} is not reset to |0>")]
    AncillaNotReset { index: usize },

    #[error("post-selection branch has probability {probability:.3e}, below cutoff")]
    ZeroProbabilityBranch { probability: f64 },

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("dense operation limited to {max} qubits, got {qubits}")]
    SizeLimit { qubits: usize, max: usize },

    #[error("configuration error for key '{key}': {reason}")]
    Config { key: String, reason: String },

    #[error("cache i/o: {0}")]
    CacheIo(#[from] std::io::Error),

    #[error("cache entry malformed: {0}")]
    CacheFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
