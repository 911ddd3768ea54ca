//! AWGN channel and Eb/N0 bookkeeping.
//!
//! Every random draw in the crate comes from a [`NoiseStream`], a ChaCha8
//! generator keyed by `(master_seed, domain)` and positioned on stream
//! `index`. A Monte-Carlo trial owns stream `(seed, TRIAL, trial_index)`, so
//! its outcome does not depend on which worker runs it or in what order.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::CodeParams;

/// Which bits count towards the energy per bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EbConvention {
    /// All `V·m` transmitted bits, CRC included.
    #[default]
    AllBits,
    /// Only the `V·m − crc_len` payload bits.
    InfoOnly,
}

impl EbConvention {
    pub fn bit_count(self, params: &CodeParams) -> usize {
        match self {
            EbConvention::AllBits => params.total_bits(),
            EbConvention::InfoOnly => params.info_bits(),
        }
    }
}

impl std::str::FromStr for EbConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-bits" | "all" => Ok(EbConvention::AllBits),
            "info-only" | "info" => Ok(EbConvention::InfoOnly),
            other => Err(format!(
                "unknown Eb convention '{other}' (all-bits | info-only)"
            )),
        }
    }
}

impl std::fmt::Display for EbConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EbConvention::AllBits => "all-bits",
            EbConvention::InfoOnly => "info-only",
        })
    }
}

/// Noise power per complex dimension for a given Eb/N0 in dB.
///
/// The transmit vector carries total energy `D`, so `Eb = D / bits` where
/// `bits` follows `convention`.
pub fn ebn0_to_n0(ebn0_db: f64, params: &CodeParams, convention: EbConvention) -> f64 {
    let eb = params.dim as f64 / convention.bit_count(params) as f64;
    eb * 10f64.powf(-ebn0_db / 10.0)
}

/// Stream domains, kept disjoint so that unrelated consumers of the same
/// master seed never share random numbers.
pub mod domain {
    pub const CODEBOOK_INIT: u64 = 1;
    pub const ORTHOGONAL: u64 = 2;
    pub const PAIRS: u64 = 3;
    pub const TRIAL: u64 = 4;
    pub const TRAIN: u64 = 5;
    pub const CHECK: u64 = 6;
}

/// Deterministic random stream keyed by `(master_seed, domain, index)`.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, domain: u64, index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&domain.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        Self { rng }
    }

    /// Private stream of one Monte-Carlo trial.
    pub fn for_trial(master_seed: u64, trial_index: u64) -> Self {
        Self::new(master_seed, domain::TRIAL, trial_index)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u32() & 1) as u8
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for NoiseStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Adds circularly-symmetric complex Gaussian noise of variance `n0` per
/// element (`n0/2` on each of the real and imaginary parts).
pub fn awgn(signal: &[Complex64], n0: f64, stream: &mut NoiseStream) -> Vec<Complex64> {
    assert!(n0 >= 0.0, "noise power must be non-negative");
    if n0 == 0.0 {
        return signal.to_vec();
    }
    let sigma = (n0 / 2.0).sqrt();
    signal
        .iter()
        .map(|&s| {
            let re = stream.gaussian();
            let im = stream.gaussian();
            s + Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Real-representation equivalent of [`awgn`]: variance `n0/2` per entry.
pub fn awgn_real(signal: &[f64], n0: f64, stream: &mut NoiseStream) -> Vec<f64> {
    assert!(n0 >= 0.0, "noise power must be non-negative");
    if n0 == 0.0 {
        return signal.to_vec();
    }
    let sigma = (n0 / 2.0).sqrt();
    signal
        .iter()
        .map(|&s| s + sigma * stream.gaussian())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> CodeParams {
        CodeParams::new(3, 2048, 128, 11).unwrap()
    }

    #[test]
    fn n0_at_zero_db() {
        let n0 = ebn0_to_n0(0.0, &reference_params(), EbConvention::AllBits);
        assert!((n0 - 128.0 / 33.0).abs() < 1e-12);
        assert!((n0 - 3.8788).abs() < 1e-4);
    }

    #[test]
    fn n0_at_training_snr() {
        let n0 = ebn0_to_n0(-1.5, &reference_params(), EbConvention::AllBits);
        assert!((n0 - 128.0 / 33.0 * 10f64.powf(0.15)).abs() < 1e-12);
        assert!((n0 - 5.4788).abs() < 1e-3);
    }

    #[test]
    fn n0_vanishes_at_infinite_snr() {
        assert_eq!(
            ebn0_to_n0(f64::INFINITY, &reference_params(), EbConvention::AllBits),
            0.0
        );
        assert!(ebn0_to_n0(300.0, &reference_params(), EbConvention::AllBits) < 1e-28);
    }

    #[test]
    fn info_only_convention_uses_payload_bits() {
        let n0 = ebn0_to_n0(0.0, &reference_params(), EbConvention::InfoOnly);
        assert!((n0 - 128.0 / 22.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_channel_is_identity() {
        let x: Vec<_> = (0..8)
            .map(|i| Complex64::new(i as f64, -(i as f64)))
            .collect();
        let mut s = NoiseStream::for_trial(1, 0);
        assert_eq!(awgn(&x, 0.0, &mut s), x);
    }

    #[test]
    fn identical_streams_give_identical_noise() {
        let x = vec![Complex64::new(0.0, 0.0); 64];
        let a = awgn(&x, 1.0, &mut NoiseStream::for_trial(9, 17));
        let b = awgn(&x, 1.0, &mut NoiseStream::for_trial(9, 17));
        let c = awgn(&x, 1.0, &mut NoiseStream::for_trial(9, 18));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_statistics() {
        let n = 1_000_000;
        let n0 = 2.0;
        let x = vec![Complex64::new(0.0, 0.0); n];
        let noise = awgn(&x, n0, &mut NoiseStream::for_trial(42, 0));

        let power = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((power - n0).abs() < 0.02 * n0, "variance {power}");

        // mean within 4 standard errors; each part has variance n0/2
        let se = (n0 / 2.0 / n as f64).sqrt();
        let mean_re = noise.iter().map(|z| z.re).sum::<f64>() / n as f64;
        let mean_im = noise.iter().map(|z| z.im).sum::<f64>() / n as f64;
        assert!(mean_re.abs() < 4.0 * se, "mean re {mean_re}");
        assert!(mean_im.abs() < 4.0 * se, "mean im {mean_im}");

        let cov = noise.iter().map(|z| z.re * z.im).sum::<f64>() / n as f64;
        let corr = cov / (n0 / 2.0);
        assert!(corr.abs() < 0.01, "re/im correlation {corr}");
    }
}
