//! Monte-Carlo PER/BER evaluation.
//!
//! Trial `i` of a sweep draws its payload and its channel noise from the
//! private stream `(seed, i)`, and trials are processed in fixed-size blocks
//! whose outcomes are scanned in index order. A sweep therefore stops at the
//! same trial, and reports the same counts, for any number of workers.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{awgn, ebn0_to_n0, EbConvention, NoiseStream};
use crate::codebook::{CodeParams, Codebook, DEFAULT_CRC_LEN};
use crate::codec::{
    bits_to_indices, encode, hard_decision, indices_to_bits, map_marginals, to_real,
};
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::kbest::{crc_assisted_decode, kbest_search, DEFAULT_K};

/// Trials evaluated in parallel between early-stop checks.
const BLOCK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderMode {
    /// Per-layer argmax of the MAP marginals.
    OneShot,
    /// K-best list search, first candidate passing the CRC.
    #[default]
    KbestCrc,
}

impl FromStr for DecoderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-shot" | "oneshot" => Ok(DecoderMode::OneShot),
            "kbest-crc" | "kbest" => Ok(DecoderMode::KbestCrc),
            other => Err(Error::InvalidConfig(format!(
                "unknown decoder mode '{other}' (one-shot | kbest-crc)"
            ))),
        }
    }
}

impl fmt::Display for DecoderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderMode::OneShot => "one-shot",
            DecoderMode::KbestCrc => "kbest-crc",
        })
    }
}

/// Where a sweep gets its codebook from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CodebookSource {
    File(PathBuf),
    /// `random:V,M,D[:seed]`
    Random {
        layers: usize,
        alphabet: usize,
        dim: usize,
        seed: u64,
    },
    /// `orthogonal:V,M,D[:seed]`
    Orthogonal {
        layers: usize,
        alphabet: usize,
        dim: usize,
        seed: u64,
    },
}

impl CodebookSource {
    pub fn build(&self, crc_len: usize) -> Result<Codebook> {
        match *self {
            CodebookSource::File(ref path) => Codebook::load_with_crc(path, crc_len),
            CodebookSource::Random {
                layers,
                alphabet,
                dim,
                seed,
            } => Ok(Codebook::random(
                CodeParams::new(layers, alphabet, dim, crc_len)?,
                seed,
            )),
            CodebookSource::Orthogonal {
                layers,
                alphabet,
                dim,
                seed,
            } => Codebook::orthogonal(CodeParams::new(layers, alphabet, dim, crc_len)?, seed),
        }
    }
}

impl FromStr for CodebookSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let generated = |spec: &str| -> Result<(usize, usize, usize, u64)> {
            let bad =
                || Error::InvalidConfig(format!("bad codebook spec '{s}' (want V,M,D[:seed])"));
            let (dims, seed) = match spec.split_once(':') {
                Some((d, seed)) => (d, seed.trim().parse().map_err(|_| bad())?),
                None => (spec, 0),
            };
            let dims: Vec<usize> = dims
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            match dims[..] {
                [v, m, d] => Ok((v, m, d, seed)),
                _ => Err(bad()),
            }
        };
        if let Some(rest) = s.strip_prefix("random:") {
            let (layers, alphabet, dim, seed) = generated(rest)?;
            Ok(CodebookSource::Random {
                layers,
                alphabet,
                dim,
                seed,
            })
        } else if let Some(rest) = s.strip_prefix("orthogonal:") {
            let (layers, alphabet, dim, seed) = generated(rest)?;
            Ok(CodebookSource::Orthogonal {
                layers,
                alphabet,
                dim,
                seed,
            })
        } else if s.is_empty() {
            Err(Error::InvalidConfig("empty codebook source".into()))
        } else {
            Ok(CodebookSource::File(PathBuf::from(s)))
        }
    }
}

impl fmt::Display for CodebookSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodebookSource::File(p) => write!(f, "{}", p.display()),
            CodebookSource::Random {
                layers,
                alphabet,
                dim,
                seed,
            } => {
                write!(f, "random:{layers},{alphabet},{dim}:{seed}")
            }
            CodebookSource::Orthogonal {
                layers,
                alphabet,
                dim,
                seed,
            } => {
                write!(f, "orthogonal:{layers},{alphabet},{dim}:{seed}")
            }
        }
    }
}

impl From<CodebookSource> for String {
    fn from(s: CodebookSource) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for CodebookSource {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Parses `a,b,c` or an inclusive range `start:stop:step` of Eb/N0 values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad Eb/N0 grid '{s}'"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts[..] {
        [single] => single
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(num)
            .collect::<Result<Vec<_>>>()?,
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub codebook: CodebookSource,
    pub crc_len: usize,
    pub ebn0_db: Vec<f64>,
    pub k: usize,
    pub mode: DecoderMode,
    /// Trial cap per grid point.
    pub max_trials: u64,
    /// Early stop once this many packet errors are seen at a point.
    pub target_errors: u64,
    pub seed: u64,
    pub eb_convention: EbConvention,
    /// Worker threads, 0 for all cores. Has no effect on results.
    #[serde(skip)]
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(codebook: CodebookSource, ebn0_db: Vec<f64>) -> Self {
        Self {
            codebook,
            crc_len: DEFAULT_CRC_LEN,
            ebn0_db,
            k: DEFAULT_K,
            mode: DecoderMode::KbestCrc,
            max_trials: 1_000_000,
            target_errors: 100,
            seed: 0,
            eb_convention: EbConvention::AllBits,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ebn0_db.is_empty() {
            return Err(Error::InvalidConfig("Eb/N0 grid is empty".into()));
        }
        if self.ebn0_db.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidConfig("Eb/N0 grid contains NaN".into()));
        }
        if self.max_trials == 0 {
            return Err(Error::InvalidConfig("max trials must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidConfig(format!("bad value '{value}' for '{key}'"));
        let value = value.trim();
        match key.trim() {
            "codebook" => self.codebook = value.parse()?,
            "crc_len" | "crc-len" => self.crc_len = value.parse().map_err(|_| bad())?,
            "ebn0" | "ebn0_db" => self.ebn0_db = parse_grid(value)?,
            "k" => self.k = value.parse().map_err(|_| bad())?,
            "mode" => self.mode = value.parse()?,
            "trials" | "max_trials" => self.max_trials = value.parse().map_err(|_| bad())?,
            "target_errors" | "target-errors" => {
                self.target_errors = value.parse().map_err(|_| bad())?
            }
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "eb_convention" | "eb-convention" => {
                self.eb_convention = value.parse().map_err(Error::InvalidConfig)?
            }
            "workers" => self.workers = value.parse().map_err(|_| bad())?,
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses a line-oriented `key = value` file; `#` starts a comment.
    /// `codebook` and `ebn0` are required.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::new(CodebookSource::File(PathBuf::new()), Vec::new());
        let mut have_codebook = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", n + 1))
            })?;
            have_codebook |= key.trim() == "codebook";
            cfg.set(key, value)?;
        }
        if !have_codebook {
            return Err(Error::InvalidConfig(
                "config has no 'codebook' entry".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }
}

/// Result of one simulated packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Decoded bits differ from the transmitted ones, or the list decoder
    /// found no candidate passing the CRC.
    pub packet_error: bool,
    pub bit_errors: usize,
    pub crc_failure: bool,
}

/// Simulates one packet: random payload, CRC, encode, AWGN, MAP marginals,
/// decode. With `n0 == 0` the decoder runs at unit noise power, which leaves
/// its decisions unchanged.
pub fn run_trial(
    codebook: &Codebook,
    n0: f64,
    k: usize,
    mode: DecoderMode,
    trial_index: u64,
    master_seed: u64,
) -> Result<TrialOutcome> {
    let params = codebook.params();
    let crc = CrcSpec::for_params(params)?;
    let mut stream = NoiseStream::for_trial(master_seed, trial_index);
    let info: Vec<u8> = (0..params.info_bits()).map(|_| stream.bit()).collect();
    let tx_bits = crc.append(&info);
    let indices = bits_to_indices(&tx_bits, params)?;
    let tx = encode(&indices, codebook)?;
    let rx = awgn(&tx.complex, n0, &mut stream);
    let y = to_real(&rx);
    let lp = map_marginals(&y, codebook, if n0 > 0.0 { n0 } else { 1.0 })?;

    let count = |bits: &[u8]| bits.iter().zip(&tx_bits).filter(|(a, b)| a != b).count();
    let outcome = match mode {
        DecoderMode::OneShot => {
            let bits = indices_to_bits(&hard_decision(&lp), params)?;
            let bit_errors = count(&bits);
            TrialOutcome {
                packet_error: bit_errors > 0,
                bit_errors,
                crc_failure: !crc.check(&bits),
            }
        }
        DecoderMode::KbestCrc => {
            let res = crc_assisted_decode(&lp, k, params)?;
            match res.bits {
                Some(bits) => {
                    let bit_errors = count(&bits);
                    TrialOutcome {
                        packet_error: bit_errors > 0,
                        bit_errors,
                        crc_failure: false,
                    }
                }
                None => {
                    // bit errors of the rank-1 (MAP) candidate
                    let best = &kbest_search(&lp, 1)[0];
                    TrialOutcome {
                        packet_error: true,
                        bit_errors: count(&indices_to_bits(&best.indices, params)?),
                        crc_failure: true,
                    }
                }
            }
        }
    };
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPoint {
    pub ebn0_db: f64,
    pub trials: u64,
    pub packet_errors: u64,
    pub bit_errors: u64,
    pub per: f64,
    pub ber: f64,
    /// Normal-approximation 95% half-width of the PER estimate.
    pub ci95: f64,
}

impl PerPoint {
    fn new(
        ebn0_db: f64,
        trials: u64,
        packet_errors: u64,
        bit_errors: u64,
        bits_per_packet: usize,
    ) -> Self {
        let per = packet_errors as f64 / trials as f64;
        let ber = bit_errors as f64 / (trials as f64 * bits_per_packet as f64);
        let ci95 = 1.96 * (per * (1.0 - per) / trials as f64).sqrt();
        Self {
            ebn0_db,
            trials,
            packet_errors,
            bit_errors,
            per,
            ber,
            ci95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerCurve {
    pub config: SweepConfig,
    pub params: CodeParams,
    pub points: Vec<PerPoint>,
}

/// Loads or generates the configured codebook and runs the sweep.
pub fn run_per_sweep(config: &SweepConfig) -> Result<PerCurve> {
    config.validate()?;
    let codebook = config.codebook.build(config.crc_len)?;
    run_per_sweep_with(&codebook, config)
}

/// Runs the sweep on an already constructed codebook.
pub fn run_per_sweep_with(codebook: &Codebook, config: &SweepConfig) -> Result<PerCurve> {
    config.validate()?;
    let params = *codebook.params();
    CrcSpec::for_params(&params)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let points = config
        .ebn0_db
        .iter()
        .map(|&ebn0| {
            let n0 = ebn0_to_n0(ebn0, &params, config.eb_convention);
            pool.install(|| run_point(codebook, config, ebn0, n0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerCurve {
        config: config.clone(),
        params,
        points,
    })
}

fn run_point(codebook: &Codebook, config: &SweepConfig, ebn0: f64, n0: f64) -> Result<PerPoint> {
    let (mut trials, mut packet_errors, mut bit_errors) = (0u64, 0u64, 0u64);
    'blocks: while trials < config.max_trials {
        let end = (trials + BLOCK as u64).min(config.max_trials);
        let outcomes = (trials..end)
            .into_par_iter()
            .map(|i| run_trial(codebook, n0, config.k, config.mode, i, config.seed))
            .collect::<Result<Vec<_>>>()?;
        for o in outcomes {
            trials += 1;
            packet_errors += o.packet_error as u64;
            bit_errors += o.bit_errors as u64;
            if config.target_errors > 0 && packet_errors >= config.target_errors {
                break 'blocks;
            }
        }
    }
    Ok(PerPoint::new(
        ebn0,
        trials,
        packet_errors,
        bit_errors,
        codebook.params().total_bits(),
    ))
}

/// One-shot and list decoding evaluated on the same trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedPoint {
    pub ebn0_db: f64,
    pub one_shot: PerPoint,
    pub kbest: PerPoint,
    /// Trials where list decoding failed although one-shot succeeded.
    /// Always zero: the accepted candidate is the hard decision whenever
    /// that passes the CRC.
    pub dominance_violations: u64,
}

/// Runs both decoders on common trials at every grid point, stopping once
/// the one-shot arm has `target_errors` packet errors (or at `max_trials`).
/// `config.mode` is ignored.
pub fn run_paired_sweep(codebook: &Codebook, config: &SweepConfig) -> Result<Vec<PairedPoint>> {
    config.validate()?;
    let params = *codebook.params();
    let bits = params.total_bits();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    config
        .ebn0_db
        .iter()
        .map(|&ebn0| {
            let n0 = ebn0_to_n0(ebn0, &params, config.eb_convention);
            let mut trials = 0u64;
            let mut one = (0u64, 0u64);
            let mut list = (0u64, 0u64);
            let mut violations = 0u64;
            'blocks: while trials < config.max_trials {
                let end = (trials + BLOCK as u64).min(config.max_trials);
                let outcomes = pool.install(|| {
                    (trials..end)
                        .into_par_iter()
                        .map(|i| {
                            let a = run_trial(
                                codebook,
                                n0,
                                config.k,
                                DecoderMode::OneShot,
                                i,
                                config.seed,
                            )?;
                            let b = run_trial(
                                codebook,
                                n0,
                                config.k,
                                DecoderMode::KbestCrc,
                                i,
                                config.seed,
                            )?;
                            Ok((a, b))
                        })
                        .collect::<Result<Vec<_>>>()
                })?;
                for (a, b) in outcomes {
                    trials += 1;
                    one.0 += a.packet_error as u64;
                    one.1 += a.bit_errors as u64;
                    list.0 += b.packet_error as u64;
                    list.1 += b.bit_errors as u64;
                    violations += (b.packet_error && !a.packet_error) as u64;
                    if config.target_errors > 0 && one.0 >= config.target_errors {
                        break 'blocks;
                    }
                }
            }
            Ok(PairedPoint {
                ebn0_db: ebn0,
                one_shot: PerPoint::new(ebn0, trials, one.0, one.1, bits),
                kbest: PerPoint::new(ebn0, trials, list.0, list.1, bits),
                dominance_violations: violations,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown format '{other}' (csv | json)"
            ))),
        }
    }
}

pub const CSV_HEADER: &str = "ebn0_db,trials,packet_errors,bit_errors,per,ber,ci95";

impl PerCurve {
    /// One row per grid point under [`CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.ebn0_db, p.trials, p.packet_errors, p.bit_errors, p.per, p.ber, p.ci95
            ));
        }
        out
    }

    /// Points together with the configuration that produced them.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn emit_results(curve: &PerCurve, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => curve.to_csv(),
        OutputFormat::Json => curve.to_json()?,
    };
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_codebook() -> Codebook {
        Codebook::random(CodeParams::new(3, 64, 32, 11).unwrap(), 1)
    }

    fn orthogonal_codebook() -> Codebook {
        Codebook::orthogonal(CodeParams::new(4, 4, 16, 6).unwrap(), 2).unwrap()
    }

    #[test]
    fn noiseless_trials_always_succeed() {
        let cb = orthogonal_codebook();
        for mode in [DecoderMode::OneShot, DecoderMode::KbestCrc] {
            for i in 0..50 {
                let o = run_trial(&cb, 0.0, 8, mode, i, 3).unwrap();
                assert!(!o.packet_error && o.bit_errors == 0 && !o.crc_failure);
            }
        }
    }

    #[test]
    fn trial_is_reproducible() {
        let cb = small_codebook();
        for i in 0..20 {
            let a = run_trial(&cb, 3.0, 16, DecoderMode::KbestCrc, i, 5).unwrap();
            let b = run_trial(&cb, 3.0, 16, DecoderMode::KbestCrc, i, 5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn list_decoding_never_loses_to_one_shot() {
        let cb = small_codebook();
        let params = *cb.params();
        let n0 = ebn0_to_n0(2.0, &params, EbConvention::AllBits);
        for i in 0..2000 {
            let one = run_trial(&cb, n0, 128, DecoderMode::OneShot, i, 11).unwrap();
            let list = run_trial(&cb, n0, 128, DecoderMode::KbestCrc, i, 11).unwrap();
            assert!(
                list.packet_error <= (one.packet_error || one.crc_failure),
                "trial {i}"
            );
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0,1.5, 3").unwrap(), vec![0.0, 1.5, 3.0]);
        assert_eq!(
            parse_grid("0:2:0.5").unwrap(),
            vec![0.0, 0.5, 1.0, 1.5, 2.0]
        );
        assert_eq!(parse_grid("-1:1:1").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn codebook_source_parsing() {
        assert_eq!(
            "random:3,64,32:7".parse::<CodebookSource>().unwrap(),
            CodebookSource::Random {
                layers: 3,
                alphabet: 64,
                dim: 32,
                seed: 7
            }
        );
        assert_eq!(
            "orthogonal:2,4,16".parse::<CodebookSource>().unwrap(),
            CodebookSource::Orthogonal {
                layers: 2,
                alphabet: 4,
                dim: 16,
                seed: 0
            }
        );
        assert_eq!(
            "cb.nosc".parse::<CodebookSource>().unwrap(),
            CodebookSource::File("cb.nosc".into())
        );
        assert!("random:3,64".parse::<CodebookSource>().is_err());
    }

    #[test]
    fn config_file_parsing() {
        let cfg = SweepConfig::from_kv_str(
            "# sweep\ncodebook = random:3,64,32:1\nebn0 = 0:4:2\nk=32\nmode=one-shot\n\
             trials = 5000 # cap\ntarget_errors=50\nseed=9\neb_convention=info-only\n",
        )
        .unwrap();
        assert_eq!(cfg.ebn0_db, vec![0.0, 2.0, 4.0]);
        assert_eq!(cfg.k, 32);
        assert_eq!(cfg.mode, DecoderMode::OneShot);
        assert_eq!(cfg.max_trials, 5000);
        assert_eq!(cfg.target_errors, 50);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.eb_convention, EbConvention::InfoOnly);

        assert!(SweepConfig::from_kv_str("ebn0=1\n").is_err());
        assert!(SweepConfig::from_kv_str("codebook=x\nbogus=1\n").is_err());
        assert!(SweepConfig::from_kv_str("codebook=x\nk\n").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = SweepConfig::new("random:3,64,32".parse().unwrap(), vec![]);
        assert!(cfg.validate().is_err());
        cfg.ebn0_db = vec![1.0];
        cfg.max_trials = 0;
        assert!(cfg.validate().is_err());
        cfg.max_trials = 10;
        assert!(cfg.validate().is_ok());
        cfg.codebook = CodebookSource::File("/nonexistent/cb.nosc".into());
        assert!(matches!(run_per_sweep(&cfg), Err(Error::Io(_))));
    }

    #[test]
    fn early_stop_counts() {
        let cb = orthogonal_codebook();
        let mut cfg = SweepConfig::new("orthogonal:4,4,16:2".parse().unwrap(), vec![-4.0, 20.0]);
        cfg.crc_len = 6;
        cfg.mode = DecoderMode::OneShot;
        cfg.max_trials = 3000;
        cfg.target_errors = 25;
        let curve = run_per_sweep_with(&cb, &cfg).unwrap();
        let low = &curve.points[0];
        assert_eq!(low.packet_errors, 25);
        assert!(low.trials < 3000);
        let high = &curve.points[1];
        assert_eq!(high.trials, 3000);
        for p in &curve.points {
            assert_eq!(p.per, p.packet_errors as f64 / p.trials as f64);
            assert!((0.0..=1.0).contains(&p.per));
            assert!(
                (p.ci95 - 1.96 * (p.per * (1.0 - p.per) / p.trials as f64).sqrt()).abs() < 1e-15
            );
        }
    }

    #[test]
    fn csv_and_json_output() {
        let cb = small_codebook();
        let mut cfg = SweepConfig::new("random:3,64,32:1".parse().unwrap(), vec![0.0, 3.0, 6.0]);
        cfg.max_trials = 500;
        cfg.k = 8;
        let curve = run_per_sweep_with(&cb, &cfg).unwrap();

        let csv = curve.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        for (line, p) in lines[1..].iter().zip(&curve.points) {
            let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(f[4], f[2] / f[1]);
            assert_eq!(f[4], p.per);
        }

        let back = PerCurve::from_json(&curve.to_json().unwrap()).unwrap();
        assert_eq!(back.points, curve.points);
        assert_eq!(back.config.ebn0_db, curve.config.ebn0_db);
    }
}
