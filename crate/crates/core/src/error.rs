use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("alphabet size M = {0} is not a power of two >= 2")]
    AlphabetNotPowerOfTwo(usize),
    #[error("codeword length D = {0} must be even and >= 2")]
    OddCodewordLength(usize),
    #[error("at least one sub-encoder is required (V = {0})")]
    NoLayers(usize),
    #[error("V*log2(M) = {total_bits} bits leaves no room for a {crc_len}-bit CRC")]
    CrcTooLong { total_bits: usize, crc_len: usize },
    #[error("codeword (layer {layer}, index {index}) has zero energy")]
    DegenerateCodeword { layer: usize, index: usize },
    #[error("cannot fit V*M = {rows} mutually orthogonal codewords in D = {dim} dimensions")]
    InfeasibleOrthogonality { rows: usize, dim: usize },
    #[error("expected {expected} {what}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("index {index} out of range for alphabet of size {alphabet}")]
    IndexOutOfRange { index: usize, alphabet: usize },
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("codebook file: {0}")]
    Format(String),
    #[error("training diverged at step {step} (lr = {lr:e}): loss = {loss}")]
    NonFiniteLoss { step: usize, lr: f64, loss: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
