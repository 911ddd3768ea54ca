//! Verification suites comparing the production paths against the
//! brute-force references of the parent module.

use std::fmt;

use crate::channel::{awgn_real, NoiseStream};
use crate::codebook::{CodeParams, Codebook};
use crate::codec::{encode, hard_decision, map_marginals, LogProbMatrix};
use crate::crc::CrcSpec;
use crate::kbest::kbest_search;
use crate::trainer::{backward, forward_loss, Batch, TrainConfig, TrainState};

use super::{
    central_difference, crc_long_division, exact_marginals, exhaustive_top_k, max_relative_error,
};

/// Stream domain for the suites' own random draws.
const SUITE_DOMAIN: u64 = 0x5u64 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn stream(seed: u64, suite: u64, index: u64) -> NoiseStream {
    NoiseStream::new(seed, SUITE_DOMAIN + suite, index)
}

/// Random log-probability matrix with rows of varying sharpness.
pub fn random_logprobs(layers: usize, alphabet: usize, s: &mut NoiseStream) -> LogProbMatrix {
    let temp = 0.5 + 4.0 * (s.below(1000) as f64 / 1000.0);
    let w = (0..layers * alphabet)
        .map(|_| temp * s.gaussian())
        .collect();
    LogProbMatrix::from_log_weights(layers, alphabet, w).expect("dimensions match")
}

/// `exp(map_marginals)` against full-enumeration posteriors on orthogonal
/// codebooks, at several noise levels.
pub fn map_exactness(
    configs: &[(usize, usize, usize)],
    realizations: u64,
    seed: u64,
) -> CheckReport {
    let mut worst = 0.0f64;
    for (ci, &(v, m, d)) in configs.iter().enumerate() {
        let params = CodeParams::new(v, m, d, 0).expect("valid test params");
        let cb = Codebook::orthogonal(params, seed + ci as u64).expect("V*M <= D");
        for r in 0..realizations {
            let mut s = stream(seed, 1, ci as u64 * 1_000_000 + r);
            let n0 = [0.25, 1.0, 4.0, 16.0][(r % 4) as usize];
            let idx: Vec<usize> = (0..v).map(|_| s.below(m)).collect();
            let tx = encode(&idx, &cb).expect("valid indices");
            let y = awgn_real(&tx.real, n0, &mut s);
            let lp = map_marginals(&y, &cb, n0).expect("valid inputs");
            let exact = exact_marginals(&y, &cb, n0);
            for (a, b) in lp.as_slice().iter().zip(&exact) {
                worst = worst.max((a.exp() - b).abs());
            }
        }
    }
    CheckReport {
        name: "MAP marginals vs exact posterior",
        passed: worst < 1e-9,
        detail: format!(
            "{} configs x {realizations} noise draws, max |dev| = {worst:.3e} (< 1e-9)",
            configs.len()
        ),
    }
}

/// K-best beam against exhaustive ranking of every tuple.
pub fn kbest_exactness(
    layers: usize,
    alphabet: usize,
    ks: &[usize],
    instances: u64,
    seed: u64,
) -> CheckReport {
    let mut mismatches = 0usize;
    let mut worst_score = 0.0f64;
    for i in 0..instances {
        let lp = random_logprobs(layers, alphabet, &mut stream(seed, 2, i));
        let max_k = ks.iter().copied().max().unwrap_or(1);
        let exhaustive = exhaustive_top_k(&lp, max_k);
        for &k in ks {
            let got = kbest_search(&lp, k);
            let want = &exhaustive[..k.min(exhaustive.len())];
            if got.len() != want.len() || got.iter().zip(want).any(|(c, (t, _))| &c.indices != t) {
                mismatches += 1;
            }
            for c in got.iter() {
                worst_score = worst_score.max((c.score - lp.score(&c.indices)).abs());
            }
        }
    }
    CheckReport {
        name: "K-best vs exhaustive top-K",
        passed: mismatches == 0 && worst_score < 1e-12,
        detail: format!(
            "V={layers} M={alphabet} K={ks:?}, {instances} instances: {mismatches} mismatching lists, \
             max score recompute error {worst_score:.1e}"
        ),
    }
}

/// Analytic gradient against central differences with the noise held fixed.
pub fn gradient_check(configs: &[(usize, usize, usize)], seed: u64) -> CheckReport {
    let mut worst = 0.0f64;
    for (ci, &(v, m, d)) in configs.iter().enumerate() {
        let params = CodeParams::new(v, m, d, 0).expect("valid test params");
        let mut config = TrainConfig::new(params);
        config.seed = seed + ci as u64;
        let state = TrainState::new(&config);
        let batch = Batch::draw(&params, 8, &mut stream(seed, 3, ci as u64));
        let n0 = 2.0;
        let (_, grad) = backward(&state, &batch, n0).expect("valid batch");
        let numeric = central_difference(
            |w| {
                let probe = TrainState::from_weights(params, w.to_vec(), &config);
                forward_loss(&probe, &batch, n0).expect("valid batch")
            },
            &state.weights,
            1e-6,
        );
        worst = worst.max(max_relative_error(&grad, &numeric, 1e-3));
    }
    CheckReport {
        name: "loss gradient vs central differences",
        passed: worst < 1e-5,
        detail: format!("{configs:?}, max relative error {worst:.3e} (< 1e-5)"),
    }
}

/// Shift-register CRC against long division, plus exhaustive single-bit
/// flip detection on words of `word_len` bits.
pub fn crc_check(random_inputs: u64, word_len: usize, seed: u64) -> CheckReport {
    let crc = CrcSpec::NR_CRC11;
    let info_len = word_len - crc.length;
    let mut mismatches = 0;
    for i in 0..random_inputs {
        let mut s = stream(seed, 4, i);
        let info: Vec<u8> = (0..info_len).map(|_| s.bit()).collect();
        let word = crc.append(&info);
        if word[info_len..] != crc_long_division(&info, &crc)[..] || !crc.check(&word) {
            mismatches += 1;
        }
    }
    let mut undetected = 0;
    let words = 32u64;
    for i in 0..words {
        let mut s = stream(seed, 5, i);
        let info: Vec<u8> = (0..info_len).map(|_| s.bit()).collect();
        let word = crc.append(&info);
        for pos in 0..word_len {
            let mut bad = word.clone();
            bad[pos] ^= 1;
            undetected += crc.check(&bad) as usize;
        }
    }
    CheckReport {
        name: "CRC11 vs long division and single-flip detection",
        passed: mismatches == 0 && undetected == 0,
        detail: format!(
            "{random_inputs} random payloads: {mismatches} mismatches; \
             {words} words x {word_len} flips: {undetected} undetected"
        ),
    }
}

/// Hard decisions and K-best orderings under rescaled noise power.
pub fn n0_invariance(vectors: u64, k: usize, seed: u64) -> CheckReport {
    let params = CodeParams::new(3, 64, 32, 11).expect("valid params");
    let cb = Codebook::random(params, seed);
    let mut differing = 0;
    for i in 0..vectors {
        let mut s = stream(seed, 6, i);
        let idx: Vec<usize> = (0..params.layers)
            .map(|_| s.below(params.alphabet))
            .collect();
        let tx = encode(&idx, &cb).expect("valid indices");
        let base = 1.0 + 3.0 * (s.below(1000) as f64 / 1000.0);
        let y = awgn_real(&tx.real, base, &mut s);
        let runs: Vec<_> = [0.1, 1.0, 10.0]
            .iter()
            .map(|f| {
                let lp = map_marginals(&y, &cb, base * f).expect("valid inputs");
                let list: Vec<Vec<usize>> = kbest_search(&lp, k)
                    .iter()
                    .map(|c| c.indices.clone())
                    .collect();
                (hard_decision(&lp), list)
            })
            .collect();
        if runs.windows(2).any(|w| w[0] != w[1]) {
            differing += 1;
        }
    }
    CheckReport {
        name: "N0 invariance of decisions",
        passed: differing == 0,
        detail: format!(
            "{vectors} received vectors, N0 x {{0.1, 1, 10}}, K={k}: {differing} differ"
        ),
    }
}

/// Every suite at its acceptance size.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    vec![
        map_exactness(&[(2, 4, 16), (3, 4, 16)], 100, seed),
        kbest_exactness(3, 8, &[1, 4, 16, 64], 500, seed),
        gradient_check(&[(2, 4, 8), (3, 8, 16)], seed),
        crc_check(1000, 44, seed),
        n0_invariance(100, 128, seed),
    ]
}
