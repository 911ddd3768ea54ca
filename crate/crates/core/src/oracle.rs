//! Brute-force reference computations.
//!
//! Everything here is written independently of the production paths it is
//! used to check: full hypothesis enumeration instead of per-layer softmax,
//! exhaustive tuple ranking instead of the K-best beam, textbook polynomial
//! long division instead of the CRC shift register, and central differences
//! instead of the analytic gradient. Exponential cost; small sizes only.

use std::cmp::Ordering;

pub mod suites;

use crate::codebook::Codebook;
use crate::codec::LogProbMatrix;
use crate::crc::CrcSpec;

/// Calls `f` on every tuple of `layers` digits in `[0, alphabet)`, in
/// lexicographic order.
pub fn for_each_tuple(layers: usize, alphabet: usize, mut f: impl FnMut(&[usize])) {
    let mut t = vec![0usize; layers];
    loop {
        f(&t);
        let mut pos = layers;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            t[pos] += 1;
            if t[pos] < alphabet {
                break;
            }
            t[pos] = 0;
        }
    }
}

/// Exact per-layer posterior marginals `P(x_v = m | y)` under the real
/// channel `y = s + n`, `n ~ N(0, N0/2·I)`, with uniform priors. Returned
/// row-major `[v][m]`.
pub fn exact_marginals(y: &[f64], codebook: &Codebook, n0: f64) -> Vec<f64> {
    let p = codebook.params();
    let mut hyps: Vec<(Vec<usize>, f64)> = Vec::new();
    for_each_tuple(p.layers, p.alphabet, |t| {
        let mut dist = 0.0;
        for (d, &yd) in y.iter().enumerate() {
            let s: f64 = t
                .iter()
                .enumerate()
                .map(|(v, &k)| codebook.row(v, k)[d])
                .sum();
            dist += (yd - s) * (yd - s);
        }
        hyps.push((t.to_vec(), -dist / n0));
    });
    let max = hyps.iter().map(|h| h.1).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = hyps.iter().map(|h| (h.1 - max).exp()).sum();

    let mut marg = vec![0.0; p.layers * p.alphabet];
    for (t, logw) in &hyps {
        let w = (logw - max).exp() / total;
        for (v, &k) in t.iter().enumerate() {
            marg[v * p.alphabet + k] += w;
        }
    }
    marg
}

/// Ranking used by the list decoder: higher score first, then the
/// lexicographically smaller tuple.
pub fn candidate_order(a: (&[usize], f64), b: (&[usize], f64)) -> Ordering {
    (b.1 + 0.0)
        .total_cmp(&(a.1 + 0.0))
        .then_with(|| a.0.cmp(b.0))
}

/// Exact top-`k` tuples over all `M^V` combinations.
pub fn exhaustive_top_k(logprobs: &LogProbMatrix, k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut all = Vec::new();
    for_each_tuple(logprobs.layers(), logprobs.alphabet(), |t| {
        let mut score = 0.0;
        for (v, &m) in t.iter().enumerate() {
            score += logprobs.row(v)[m];
        }
        all.push((t.to_vec(), score));
    });
    all.sort_by(|a, b| candidate_order((&a.0, a.1), (&b.0, b.1)));
    all.truncate(k);
    all
}

/// CRC parity bits by long division of `info(x)·x^L` by the generator,
/// operating on an explicit coefficient vector.
pub fn crc_long_division(info: &[u8], spec: &CrcSpec) -> Vec<u8> {
    let len = spec.length;
    // generator coefficients, highest degree first
    let gen: Vec<u8> = (0..=len)
        .rev()
        .map(|i| {
            if i == len {
                1
            } else {
                ((spec.poly >> i) & 1) as u8
            }
        })
        .collect();
    let mut work: Vec<u8> = info
        .iter()
        .copied()
        .chain(std::iter::repeat_n(0, len))
        .collect();
    for i in 0..info.len() {
        if work[i] == 1 {
            for (w, g) in work[i..=i + len].iter_mut().zip(&gen) {
                *w ^= g;
            }
        }
    }
    work[info.len()..].to_vec()
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest entrywise relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}
