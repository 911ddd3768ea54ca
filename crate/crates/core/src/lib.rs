//! Near-orthogonal superposition (NOS) codes for short packets over AWGN.
//!
//! A packet of `V·m` bits is split into `V` chunks, each chunk selects one
//! codeword from its own sub-codebook, and the `V` codewords are summed into
//! one length-`D` real vector sent as `D/2` complex symbols. The receiver
//! computes per-layer posterior marginals with a correlation softmax and
//! optionally runs a CRC-aided K-best list search over the layer tree.
//!
//! Modules:
//!
//! - [`codebook`]: code parameters, codebook construction, analysis, file format
//! - [`codec`]: bit/index mapping, superposition encoding, MAP marginals
//! - [`channel`]: Eb/N0 accounting and AWGN with per-trial noise streams
//! - [`crc`]: 11-bit CRC used to validate list candidates
//! - [`kbest`]: K-best tree search and CRC-aided list decoding
//! - [`trainer`]: end-to-end cross-entropy training of the codebook with Adam
//! - [`harness`]: Monte-Carlo PER/BER sweeps and result files
//! - [`oracle`]: brute-force reference implementations used for verification

pub mod channel;
pub mod codebook;
pub mod codec;
pub mod crc;
mod error;
pub mod harness;
pub mod kbest;
pub mod oracle;
pub mod trainer;

pub use channel::{awgn, ebn0_to_n0, EbConvention, NoiseStream};
pub use codebook::{CodeParams, Codebook, CorrStats, DistStats, Histogram};
pub use codec::{LogProbMatrix, TxSignal};
pub use crc::CrcSpec;
pub use error::{Error, Result};
pub use harness::{
    CodebookSource, DecoderMode, OutputFormat, PairedPoint, PerCurve, PerPoint, SweepConfig,
};
pub use kbest::{Candidate, CandidateList, DecodeResult, DecodeStatus};
pub use trainer::{TrainConfig, TrainState, TrainingLog};
