//! Code parameters, codebook storage and structural analysis.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{domain, NoiseStream};
use crate::error::{Error, Result};

/// Default CRC length in bits.
pub const DEFAULT_CRC_LEN: usize = 11;

const MAGIC: &[u8; 4] = b"NOSC";
const VERSION: u32 = 1;
/// Size of the codebook file header in bytes.
pub const HEADER_LEN: usize = 20;

/// Bins used by the correlation and distance histograms.
pub const HISTOGRAM_BINS: usize = 100;

/// `(V, M, D)` configuration of a NOS code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Number of sub-encoders `V`.
    pub layers: usize,
    /// One-hot alphabet size `M = 2^m`.
    pub alphabet: usize,
    /// Real codeword length `D`.
    pub dim: usize,
    /// Bits carried per layer, `m = log2(M)`.
    pub bits_per_layer: usize,
    pub crc_len: usize,
}

impl CodeParams {
    pub fn new(layers: usize, alphabet: usize, dim: usize, crc_len: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::NoLayers(layers));
        }
        if alphabet < 2 || !alphabet.is_power_of_two() {
            return Err(Error::AlphabetNotPowerOfTwo(alphabet));
        }
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::OddCodewordLength(dim));
        }
        let bits_per_layer = alphabet.trailing_zeros() as usize;
        let total_bits = layers * bits_per_layer;
        if total_bits <= crc_len {
            return Err(Error::CrcTooLong {
                total_bits,
                crc_len,
            });
        }
        Ok(Self {
            layers,
            alphabet,
            dim,
            bits_per_layer,
            crc_len,
        })
    }

    /// `V·m`, every bit carried by one packet (payload and CRC).
    pub fn total_bits(&self) -> usize {
        self.layers * self.bits_per_layer
    }

    /// `V·m − crc_len`.
    pub fn info_bits(&self) -> usize {
        self.total_bits() - self.crc_len
    }

    /// Bits per complex channel use, `V·m / (D/2)`.
    pub fn rate(&self) -> f64 {
        self.total_bits() as f64 / (self.dim / 2) as f64
    }

    /// Energy of every normalized codeword, `D/V`.
    pub fn row_energy(&self) -> f64 {
        self.dim as f64 / self.layers as f64
    }

    /// Number of stored codewords, `V·M`.
    pub fn rows(&self) -> usize {
        self.layers * self.alphabet
    }
}

/// `V×M×D` table of real codewords stored row-major as `[v][k][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    params: CodeParams,
    entries: Vec<f64>,
}

impl Codebook {
    /// Wraps raw entries without normalizing them.
    pub fn from_entries(params: CodeParams, entries: Vec<f64>) -> Result<Self> {
        let expected = params.rows() * params.dim;
        if entries.len() != expected {
            return Err(Error::LengthMismatch {
                what: "codebook entries",
                expected,
                actual: entries.len(),
            });
        }
        Ok(Self { params, entries })
    }

    /// I.i.d. standard normal entries, then [`Codebook::normalize`].
    pub fn random(params: CodeParams, seed: u64) -> Self {
        let mut stream = NoiseStream::new(seed, domain::CODEBOOK_INIT, 0);
        let entries = (0..params.rows() * params.dim)
            .map(|_| stream.gaussian())
            .collect();
        let mut cb = Self { params, entries };
        cb.normalize()
            .expect("a Gaussian row has zero energy with probability zero");
        cb
    }

    /// `V·M` mutually orthogonal codewords of energy `D/V`, obtained by
    /// Gram-Schmidt on Gaussian vectors. Requires `V·M ≤ D`.
    pub fn orthogonal(params: CodeParams, seed: u64) -> Result<Self> {
        let rows = params.rows();
        let dim = params.dim;
        if rows > dim {
            return Err(Error::InfeasibleOrthogonality { rows, dim });
        }
        let mut stream = NoiseStream::new(seed, domain::ORTHOGONAL, 0);
        let mut entries = vec![0.0; rows * dim];
        for r in 0..rows {
            let (done, rest) = entries.split_at_mut(r * dim);
            let row = &mut rest[..dim];
            loop {
                row.iter_mut().for_each(|x| *x = stream.gaussian());
                // two passes of modified Gram-Schmidt keep the residual
                // inner products at rounding level
                for _ in 0..2 {
                    for prev in done.chunks_exact(dim) {
                        let c = dot(row, prev);
                        row.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
                    }
                }
                let norm = dot(row, row).sqrt();
                if norm > 1e-6 {
                    row.iter_mut().for_each(|x| *x /= norm);
                    break;
                }
            }
        }
        let scale = params.row_energy().sqrt();
        entries.iter_mut().for_each(|x| *x *= scale);
        Ok(Self { params, entries })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    /// Codeword of layer `layer`, index `index`.
    pub fn row(&self, layer: usize, index: usize) -> &[f64] {
        let d = self.params.dim;
        let start = (layer * self.params.alphabet + index) * d;
        &self.entries[start..start + d]
    }

    /// Codewords of one layer, `M·D` values.
    pub fn layer(&self, layer: usize) -> &[f64] {
        let len = self.params.alphabet * self.params.dim;
        &self.entries[layer * len..(layer + 1) * len]
    }

    /// Rescales every row to energy `D/V`, keeping its direction.
    pub fn normalize(&mut self) -> Result<()> {
        let target = self.params.row_energy();
        let (alphabet, dim) = (self.params.alphabet, self.params.dim);
        for (r, row) in self.entries.chunks_exact_mut(dim).enumerate() {
            let energy = dot(row, row);
            if energy == 0.0 || !energy.is_finite() {
                return Err(Error::DegenerateCodeword {
                    layer: r / alphabet,
                    index: r % alphabet,
                });
            }
            let scale = (target / energy).sqrt();
            row.iter_mut().for_each(|x| *x *= scale);
        }
        Ok(())
    }

    /// Largest relative deviation of a row energy from `D/V`.
    pub fn max_energy_error(&self) -> f64 {
        let target = self.params.row_energy();
        self.entries
            .chunks_exact(self.params.dim)
            .map(|row| ((dot(row, row) - target) / target).abs())
            .fold(0.0, f64::max)
    }

    /// Normalized cross-correlation magnitudes `|c_ik · c_jl| / (D/V)` over
    /// all `i ≠ j` and all `k, l`.
    pub fn cross_correlation(&self) -> CorrStats {
        let p = self.params;
        let scale = 1.0 / p.row_energy();
        let rows = p.rows();

        // each unordered layer pair is visited once and counted twice
        let visit = |r: usize, f: &mut dyn FnMut(f64)| {
            let layer = r / p.alphabet;
            let a = &self.entries[r * p.dim..(r + 1) * p.dim];
            for other in (layer + 1)..p.layers {
                for b in self.layer(other).chunks_exact(p.dim) {
                    f(dot(a, b).abs() * scale);
                }
            }
        };

        let partial: Vec<(f64, f64)> = (0..rows)
            .into_par_iter()
            .map(|r| {
                let (mut max, mut sum) = (0.0f64, 0.0f64);
                visit(r, &mut |c| {
                    max = max.max(c);
                    sum += c;
                });
                (max, sum)
            })
            .collect();
        let max_abs = partial.iter().map(|t| t.0).fold(0.0, f64::max);
        let sum: f64 = partial.iter().map(|t| t.1).sum();

        let counts = (0..rows)
            .into_par_iter()
            .map(|r| {
                let mut counts = vec![0u64; HISTOGRAM_BINS];
                visit(r, &mut |c| counts[bin_of(c, max_abs)] += 2);
                counts
            })
            .reduce(
                || vec![0u64; HISTOGRAM_BINS],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );

        let pairs = p.layers * (p.layers - 1) / 2 * p.alphabet * p.alphabet;
        let mean_abs = if pairs == 0 { 0.0 } else { sum / pairs as f64 };
        CorrStats {
            max_abs,
            mean_abs,
            histogram: Histogram::new(max_abs, counts),
        }
    }

    /// Squared distances between superimposed transmit vectors of `n_pairs`
    /// pairs of distinct, uniformly drawn messages.
    pub fn pairwise_distance_stats(&self, n_pairs: usize, seed: u64) -> Result<DistStats> {
        if n_pairs == 0 {
            return Err(Error::InvalidConfig("n_pairs must be at least 1".into()));
        }
        let p = self.params;
        let distances: Vec<f64> = (0..n_pairs as u64)
            .into_par_iter()
            .map(|i| {
                let mut stream = NoiseStream::new(seed, domain::PAIRS, i);
                let (a, b) = loop {
                    let a: Vec<usize> = (0..p.layers).map(|_| stream.below(p.alphabet)).collect();
                    let b: Vec<usize> = (0..p.layers).map(|_| stream.below(p.alphabet)).collect();
                    if a != b {
                        break (a, b);
                    }
                };
                let mut diff = vec![0.0; p.dim];
                for v in 0..p.layers {
                    if a[v] == b[v] {
                        continue;
                    }
                    let (ra, rb) = (self.row(v, a[v]), self.row(v, b[v]));
                    for ((d, x), y) in diff.iter_mut().zip(ra).zip(rb) {
                        *d += x - y;
                    }
                }
                dot(&diff, &diff)
            })
            .collect();

        let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
        let max = distances.iter().copied().fold(0.0, f64::max);
        let mean = distances.iter().sum::<f64>() / n_pairs as f64;
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        for &d in &distances {
            counts[bin_of(d, max)] += 1;
        }
        Ok(DistStats {
            sample_count: n_pairs,
            min,
            mean,
            max,
            histogram: Histogram::new(max, counts),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.entries.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for n in [p.layers, p.alphabet, p.dim] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for x in &self.entries {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// Parses a codebook file. Entries are taken verbatim (no renormalization).
    pub fn from_bytes(bytes: &[u8], crc_len: usize) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "truncated header: {} of {HEADER_LEN} bytes",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", &bytes[0..4])));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let (v, m, d) = (word(8) as usize, word(12) as usize, word(16) as usize);
        let payload = v
            .checked_mul(m)
            .and_then(|x| x.checked_mul(d))
            .and_then(|x| x.checked_mul(8))
            .ok_or_else(|| Error::Format(format!("dimensions {v}x{m}x{d} overflow")))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != payload {
            return Err(Error::Format(format!(
                "payload is {} bytes, expected {payload} for {v}x{m}x{d}",
                body.len()
            )));
        }
        let params = CodeParams::new(v, m, d, crc_len)?;
        let entries = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_entries(params, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        f.write_all(&self.to_bytes())?;
        f.flush()?;
        Ok(())
    }

    /// Loads a codebook assuming the default 11-bit CRC.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_crc(path, DEFAULT_CRC_LEN)
    }

    pub fn load_with_crc(path: impl AsRef<Path>, crc_len: usize) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, crc_len)
    }
}

/// Uniform-bin histogram over `[0, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(upper: f64, counts: Vec<u64>) -> Self {
        let bins = counts.len();
        let edges = (0..=bins).map(|i| upper * i as f64 / bins as f64).collect();
        Self { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn bin_of(x: f64, upper: f64) -> usize {
    if upper <= 0.0 {
        return 0;
    }
    ((x / upper * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

/// Aggregated normalized cross-correlation between codewords of different
/// layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub histogram: Histogram,
}

/// Squared pairwise distances of superimposed transmit vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistStats {
    pub sample_count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub histogram: Histogram,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
