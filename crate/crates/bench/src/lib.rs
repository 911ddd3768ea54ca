//! Shared fixtures for the criterion benches.

use nos_core::channel::{awgn_real, NoiseStream};
use nos_core::codec::encode;
use nos_core::{CodeParams, Codebook};

/// The desk configuration: V=3, M=64, D=32 with CRC11.
pub fn desk_params() -> CodeParams {
    CodeParams::new(3, 64, 32, 11).expect("valid params")
}

/// A larger configuration closer to practical block lengths.
pub fn wide_params() -> CodeParams {
    CodeParams::new(6, 256, 128, 11).expect("valid params")
}

/// A noisy observation of a random message on `cb`.
pub fn received(cb: &Codebook, n0: f64, seed: u64) -> Vec<f64> {
    let p = cb.params();
    let mut s = NoiseStream::new(seed, 0xBE4C, 0);
    let idx: Vec<usize> = (0..p.layers).map(|_| s.below(p.alphabet)).collect();
    let tx = encode(&idx, cb).expect("valid indices");
    awgn_real(&tx.real, n0, &mut s)
}
