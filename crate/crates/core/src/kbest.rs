//! CRC-aided K-best list decoding over the layer tree.
//!
//! The score of a path is the running sum of per-layer log marginals. The
//! increment at layer `v` depends only on the index chosen at that layer,
//! so pruning to the best `K` prefixes never discards a prefix of a global
//! top-`K` tuple and the beam returns the exact top-`K` list.

use std::cmp::Ordering;
use std::ops::Deref;

use crate::codebook::CodeParams;
use crate::codec::{indices_to_bits, LogProbMatrix};
use crate::crc::CrcSpec;
use crate::error::{Error, Result};

/// Default list size.
pub const DEFAULT_K: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub indices: Vec<usize>,
    /// `Σ_v l[v][indices[v]]`.
    pub score: f64,
}

/// Candidates in decreasing score order; equal scores are ordered by
/// lexicographically smaller index tuple first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateList(Vec<Candidate>);

impl CandidateList {
    pub fn into_vec(self) -> Vec<Candidate> {
        self.0
    }
}

impl Deref for CandidateList {
    type Target = [Candidate];

    fn deref(&self) -> &[Candidate] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a CandidateList {
    type Item = &'a Candidate;
    type IntoIter = std::slice::Iter<'a, Candidate>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn rank(score_a: f64, score_b: f64) -> Ordering {
    // adding 0.0 folds -0.0 into +0.0 so that the two compare equal
    (score_b + 0.0).total_cmp(&(score_a + 0.0))
}

/// Breadth-first beam over layers `0..V`, keeping the best `k` paths per
/// layer. Returns `min(k, M^V)` candidates.
///
/// # Panics
///
/// If `k == 0`.
pub fn kbest_search(logprobs: &LogProbMatrix, k: usize) -> CandidateList {
    assert!(k >= 1, "list size must be at least 1");
    let alphabet = logprobs.alphabet();
    let mut survivors = vec![Candidate {
        indices: Vec::with_capacity(logprobs.layers()),
        score: 0.0,
    }];

    // (score, parent, index)
    let mut children: Vec<(f64, usize, usize)> = Vec::new();
    for v in 0..logprobs.layers() {
        let row = logprobs.row(v);
        children.clear();
        for (parent, path) in survivors.iter().enumerate() {
            children.extend(
                row.iter()
                    .enumerate()
                    .map(|(m, &l)| (path.score + l, parent, m)),
            );
        }

        let order = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            rank(a.0, b.0)
                .then_with(|| survivors[a.1].indices.cmp(&survivors[b.1].indices))
                .then(a.2.cmp(&b.2))
        };
        if children.len() > k {
            children.select_nth_unstable_by(k - 1, order);
            children.truncate(k);
        }
        children.sort_unstable_by(order);

        survivors = children
            .iter()
            .map(|&(score, parent, m)| {
                let mut indices = survivors[parent].indices.clone();
                indices.push(m);
                Candidate { indices, score }
            })
            .collect();
        debug_assert!(survivors.len() <= k.min(alphabet.pow(v as u32 + 1)));
    }
    CandidateList(survivors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Success,
    CrcFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Accepted packet bits (payload followed by CRC).
    pub bits: Option<Vec<u8>>,
    pub status: DecodeStatus,
    /// 1-based list position of the accepted candidate.
    pub candidate_rank: Option<usize>,
}

impl DecodeResult {
    pub fn is_success(&self) -> bool {
        self.status == DecodeStatus::Success
    }
}

/// Runs [`kbest_search`] and returns the best candidate whose bits pass the
/// CRC, or [`DecodeStatus::CrcFailure`] when none does.
pub fn crc_assisted_decode(
    logprobs: &LogProbMatrix,
    k: usize,
    params: &CodeParams,
) -> Result<DecodeResult> {
    if logprobs.layers() != params.layers || logprobs.alphabet() != params.alphabet {
        return Err(Error::InvalidConfig(format!(
            "log-probabilities are {}x{}, code is V={} M={}",
            logprobs.layers(),
            logprobs.alphabet(),
            params.layers,
            params.alphabet
        )));
    }
    let crc = CrcSpec::for_params(params)?;
    for (i, cand) in kbest_search(logprobs, k).iter().enumerate() {
        let bits = indices_to_bits(&cand.indices, params)?;
        if crc.check(&bits) {
            return Ok(DecodeResult {
                bits: Some(bits),
                status: DecodeStatus::Success,
                candidate_rank: Some(i + 1),
            });
        }
    }
    Ok(DecodeResult {
        bits: None,
        status: DecodeStatus::CrcFailure,
        candidate_rank: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::NoiseStream;
    use crate::codebook::Codebook;
    use crate::codec::{bits_to_indices, encode, hard_decision, map_marginals};
    use crate::crc::crc_append;
    use crate::oracle::exhaustive_top_k;

    fn random_logprobs(layers: usize, alphabet: usize, seed: u64) -> LogProbMatrix {
        let mut s = NoiseStream::new(seed, 1000, 0);
        let w = (0..layers * alphabet).map(|_| 3.0 * s.gaussian()).collect();
        LogProbMatrix::from_log_weights(layers, alphabet, w).unwrap()
    }

    #[test]
    fn two_by_two_example() {
        let lp = LogProbMatrix::from_probabilities(2, 2, &[0.7, 0.3, 0.6, 0.4]).unwrap();
        let list = kbest_search(&lp, 2);
        assert_eq!(list.len(), 2);
        assert_eq!(list[0].indices, vec![0, 0]);
        assert!((list[0].score - 0.42f64.ln()).abs() < 1e-12);
        assert_eq!(list[1].indices, vec![0, 1]);
        assert!((list[1].score - 0.28f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn k_one_is_greedy() {
        for seed in 0..50 {
            let lp = random_logprobs(4, 8, seed);
            let list = kbest_search(&lp, 1);
            assert_eq!(list.len(), 1);
            assert_eq!(list[0].indices, hard_decision(&lp));
            let best: f64 = (0..4)
                .map(|v| lp.row(v).iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .sum();
            assert!((list[0].score - best).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_exhaustive_top_16() {
        for seed in 0..100 {
            let lp = random_logprobs(3, 8, seed);
            let got = kbest_search(&lp, 16);
            let want = exhaustive_top_k(&lp, 16);
            assert_eq!(got.len(), 16);
            for (c, (t, s)) in got.iter().zip(&want) {
                assert_eq!(&c.indices, t);
                assert!((c.score - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_follow_lexicographic_order() {
        let lp = LogProbMatrix::from_probabilities(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let got: Vec<_> = kbest_search(&lp, 4)
            .iter()
            .map(|c| c.indices.clone())
            .collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let top3: Vec<_> = kbest_search(&lp, 3)
            .iter()
            .map(|c| c.indices.clone())
            .collect();
        assert_eq!(top3, got[..3]);
    }

    #[test]
    fn small_tree_returns_every_tuple() {
        let lp = random_logprobs(2, 4, 3);
        assert_eq!(kbest_search(&lp, 128).len(), 16);
    }

    #[test]
    fn larger_k_extends_smaller_k() {
        let lp = random_logprobs(3, 16, 9);
        let big = kbest_search(&lp, 64);
        for k in [1, 5, 17, 63] {
            assert_eq!(&kbest_search(&lp, k)[..], &big[..k]);
        }
    }

    #[test]
    fn scores_are_recomputable() {
        let lp = random_logprobs(5, 8, 2);
        for c in &kbest_search(&lp, 100) {
            assert!((c.score - lp.score(&c.indices)).abs() < 1e-12);
        }
    }

    fn crc_params() -> CodeParams {
        CodeParams::new(3, 256, 64, 11).unwrap()
    }

    fn packet(seed: u64) -> (Vec<u8>, Vec<usize>) {
        let p = crc_params();
        let mut s = NoiseStream::new(seed, 5000, 0);
        let info: Vec<u8> = (0..p.info_bits()).map(|_| s.bit()).collect();
        let bits = crc_append(&info, &p).unwrap();
        let idx = bits_to_indices(&bits, &p).unwrap();
        (bits, idx)
    }

    #[test]
    fn noiseless_decode_accepts_rank_one() {
        let p = crc_params();
        let cb = Codebook::random(p, 4);
        let (bits, idx) = packet(1);
        let tx = encode(&idx, &cb).unwrap();
        let lp = map_marginals(&tx.real, &cb, 0.5).unwrap();
        let res = crc_assisted_decode(&lp, DEFAULT_K, &p).unwrap();
        assert!(res.is_success());
        assert_eq!(res.candidate_rank, Some(1));
        assert_eq!(res.bits.unwrap(), bits);
    }

    #[test]
    fn recovers_truth_below_rank_one() {
        let p = crc_params();
        let (bits, idx) = packet(2);
        // layer 0 prefers a wrong index; the truth is second there
        let wrong = (idx[0] + 1) % 256;
        let mut w = vec![0.0; 3 * 256];
        w[wrong] = 5.0;
        w[idx[0]] = 4.0;
        for v in 1..3 {
            w[v * 256 + idx[v]] = 6.0;
        }
        let lp = LogProbMatrix::from_log_weights(3, 256, w).unwrap();
        let res = crc_assisted_decode(&lp, 16, &p).unwrap();
        assert!(res.is_success());
        assert!(res.candidate_rank.unwrap() > 1);
        assert_eq!(res.bits.unwrap(), bits);
    }

    #[test]
    fn all_candidates_failing_crc() {
        let p = crc_params();
        let (_, idx) = packet(3);
        // steer the whole list towards tuples that differ from the codeword
        // only in the low bits of the last layer; the CRC flags every one
        let mut w = vec![-50.0; 3 * 256];
        w[idx[0]] = 0.0;
        w[256 + idx[1]] = 0.0;
        let base = idx[2] & !0x3;
        for j in 0..4 {
            if base + j != idx[2] {
                w[512 + base + j] = 0.0;
            }
        }
        let lp = LogProbMatrix::from_log_weights(3, 256, w).unwrap();
        let res = crc_assisted_decode(&lp, 3, &p).unwrap();
        assert_eq!(res.status, DecodeStatus::CrcFailure);
        assert!(res.bits.is_none() && res.candidate_rank.is_none());
    }

    #[test]
    fn k_one_equals_hard_decision_plus_crc() {
        let p = crc_params();
        let crc = CrcSpec::for_params(&p).unwrap();
        for seed in 0..200 {
            let lp = random_logprobs(3, 256, seed);
            let hard = indices_to_bits(&hard_decision(&lp), &p).unwrap();
            let res = crc_assisted_decode(&lp, 1, &p).unwrap();
            if crc.check(&hard) {
                assert_eq!(res.bits.unwrap(), hard);
            } else {
                assert_eq!(res.status, DecodeStatus::CrcFailure);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let lp = random_logprobs(2, 256, 0);
        assert!(crc_assisted_decode(&lp, 4, &crc_params()).is_err());
    }
}
