//! Bit/index mapping, superposition encoding and the MAP marginal decoder.

use num_complex::Complex64;

use crate::codebook::{dot, CodeParams, Codebook};
use crate::error::{Error, Result};

/// Splits `V·m` bits into `V` contiguous chunks, each read MSB-first.
pub fn bits_to_indices(bits: &[u8], params: &CodeParams) -> Result<Vec<usize>> {
    if bits.len() != params.total_bits() {
        return Err(Error::LengthMismatch {
            what: "packet bits",
            expected: params.total_bits(),
            actual: bits.len(),
        });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidBit(b));
    }
    Ok(bits
        .chunks_exact(params.bits_per_layer)
        .map(|chunk| chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
        .collect())
}

/// Inverse of [`bits_to_indices`].
pub fn indices_to_bits(indices: &[usize], params: &CodeParams) -> Result<Vec<u8>> {
    check_indices(indices, params)?;
    let m = params.bits_per_layer;
    Ok(indices
        .iter()
        .flat_map(|&idx| (0..m).rev().map(move |i| ((idx >> i) & 1) as u8))
        .collect())
}

fn check_indices(indices: &[usize], params: &CodeParams) -> Result<()> {
    if indices.len() != params.layers {
        return Err(Error::LengthMismatch {
            what: "layer indices",
            expected: params.layers,
            actual: indices.len(),
        });
    }
    if let Some(&index) = indices.iter().find(|&&i| i >= params.alphabet) {
        return Err(Error::IndexOutOfRange {
            index,
            alphabet: params.alphabet,
        });
    }
    Ok(())
}

/// Transmit vector in both representations.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSignal {
    /// Superimposed real vector `s`, length `D`.
    pub real: Vec<f64>,
    /// `s̃[j] = s[j] + i·s[j + D/2]`, length `D/2`.
    pub complex: Vec<Complex64>,
}

/// Sums the selected codeword of every layer.
pub fn encode(indices: &[usize], codebook: &Codebook) -> Result<TxSignal> {
    let params = codebook.params();
    check_indices(indices, params)?;
    let mut real = vec![0.0; params.dim];
    for (v, &k) in indices.iter().enumerate() {
        real.iter_mut()
            .zip(codebook.row(v, k))
            .for_each(|(s, c)| *s += c);
    }
    let complex = to_complex(&real)?;
    Ok(TxSignal { real, complex })
}

/// First half of `real` becomes the real parts, second half the imaginary parts.
pub fn to_complex(real: &[f64]) -> Result<Vec<Complex64>> {
    if !real.len().is_multiple_of(2) {
        return Err(Error::OddCodewordLength(real.len()));
    }
    let (re, im) = real.split_at(real.len() / 2);
    Ok(re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect())
}

pub fn to_real(complex: &[Complex64]) -> Vec<f64> {
    complex
        .iter()
        .map(|z| z.re)
        .chain(complex.iter().map(|z| z.im))
        .collect()
}

/// Per-layer log marginal posteriors `l[v][m]`; every row is log-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbMatrix {
    layers: usize,
    alphabet: usize,
    data: Vec<f64>,
}

impl LogProbMatrix {
    /// Wraps rows that are already log-normalized.
    pub fn new(layers: usize, alphabet: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != layers * alphabet {
            return Err(Error::LengthMismatch {
                what: "log-probability entries",
                expected: layers * alphabet,
                actual: data.len(),
            });
        }
        Ok(Self {
            layers,
            alphabet,
            data,
        })
    }

    /// Log-softmax of arbitrary per-layer log weights.
    pub fn from_log_weights(layers: usize, alphabet: usize, mut data: Vec<f64>) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::InvalidConfig("empty alphabet".into()));
        }
        let mut lp = Self::new(layers, alphabet, std::mem::take(&mut data))?;
        lp.data
            .chunks_exact_mut(alphabet)
            .for_each(log_softmax_in_place);
        Ok(lp)
    }

    /// Row-normalizes per-layer probabilities and takes logs.
    pub fn from_probabilities(layers: usize, alphabet: usize, probs: &[f64]) -> Result<Self> {
        Self::from_log_weights(layers, alphabet, probs.iter().map(|p| p.ln()).collect())
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn row(&self, layer: usize) -> &[f64] {
        &self.data[layer * self.alphabet..(layer + 1) * self.alphabet]
    }

    pub fn get(&self, layer: usize, index: usize) -> f64 {
        self.data[layer * self.alphabet + index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `Σ_v l[v][indices[v]]`, accumulated in layer order.
    pub fn score(&self, indices: &[usize]) -> f64 {
        indices
            .iter()
            .enumerate()
            .fold(0.0, |acc, (v, &m)| acc + self.get(v, m))
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub(crate) fn log_softmax_in_place(row: &mut [f64]) {
    let lse = log_sum_exp(row);
    row.iter_mut().for_each(|x| *x -= lse);
}

/// Scaled correlations `2·y·c[v][m]/N0`, `V·M` values.
pub(crate) fn correlation_logits(y: &[f64], codebook: &Codebook, n0: f64) -> Vec<f64> {
    let scale = 2.0 / n0;
    codebook
        .entries()
        .chunks_exact(codebook.params().dim)
        .map(|c| scale * dot(y, c))
        .collect()
}

/// Simplified MAP marginals: per layer, the softmax of `2·y·c[v][m]/N0`.
pub fn map_marginals(y: &[f64], codebook: &Codebook, n0: f64) -> Result<LogProbMatrix> {
    if n0.is_nan() || n0 <= 0.0 {
        return Err(Error::NonPositiveNoise(n0));
    }
    let p = codebook.params();
    if y.len() != p.dim {
        return Err(Error::LengthMismatch {
            what: "received samples",
            expected: p.dim,
            actual: y.len(),
        });
    }
    LogProbMatrix::from_log_weights(p.layers, p.alphabet, correlation_logits(y, codebook, n0))
}

/// Per-layer argmax; ties go to the smaller index.
pub fn hard_decision(logprobs: &LogProbMatrix) -> Vec<usize> {
    (0..logprobs.layers())
        .map(|v| {
            let row = logprobs.row(v);
            let mut best = 0;
            for (m, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = m;
                }
            }
            best
        })
        .collect()
}
