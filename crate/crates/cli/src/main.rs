use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nos_core::channel::{awgn, ebn0_to_n0, EbConvention, NoiseStream};
use nos_core::codebook::{CodeParams, Codebook, DEFAULT_CRC_LEN};
use nos_core::codec::{
    bits_to_indices, encode, hard_decision, indices_to_bits, map_marginals, to_complex, to_real,
};
use nos_core::crc::CrcSpec;
use nos_core::harness::{
    emit_results, run_per_sweep, CodebookSource, DecoderMode, OutputFormat, SweepConfig,
};
use nos_core::kbest::{crc_assisted_decode, DEFAULT_K};
use nos_core::trainer::{train_with, TrainConfig};

mod oracle;

#[derive(Parser)]
#[command(
    name = "nosc",
    version,
    about = "Near-orthogonal superposition codes for short packets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a codebook and write it with its training log
    Train(TrainArgs),
    /// Report cross-correlation and pairwise-distance statistics of a codebook
    Analyze(AnalyzeArgs),
    /// Monte-Carlo PER/BER sweep over an Eb/N0 grid
    Sweep(SweepArgs),
    /// Encode packets of information bits into transmit vectors
    Encode(EncodeArgs),
    /// Decode received vectors back into information bits
    Decode(DecodeArgs),
    /// Run the brute-force verification suites
    Oracle(OracleArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Number of sub-encoders V
    #[arg(long, short = 'V')]
    layers: usize,
    /// Alphabet size M (power of two)
    #[arg(long, short = 'M')]
    alphabet: usize,
    /// Real codeword length D
    #[arg(long, short = 'D')]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_CRC_LEN)]
    crc_len: usize,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 1024)]
    batch: usize,
    #[arg(long, default_value_t = 2e-4)]
    lr_start: f64,
    #[arg(long, default_value_t = 2e-6)]
    lr_end: f64,
    /// Training Eb/N0 in dB
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    train_snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    log_every: usize,
    #[arg(long, default_value = "all-bits")]
    eb_convention: EbConvention,
    /// Codebook output file
    #[arg(long)]
    out: PathBuf,
    /// Training log (CSV)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Codebook file or generator spec (random:V,M,D[:seed], orthogonal:V,M,D[:seed])
    #[arg(long)]
    codebook: String,
    #[arg(long, default_value_t = DEFAULT_CRC_LEN)]
    crc_len: usize,
    /// Message pairs sampled for the distance statistics
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// text or json
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// key=value configuration file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    codebook: Option<String>,
    /// Eb/N0 grid: a,b,c or start:stop:step (dB)
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// one-shot or kbest-crc
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trial cap per grid point
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long)]
    eb_convention: Option<String>,
    #[arg(long)]
    crc_len: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    codebook: String,
    #[arg(long, default_value_t = DEFAULT_CRC_LEN)]
    crc_len: usize,
    /// One packet of information bits per line, as 0/1 characters
    #[arg(long)]
    input: PathBuf,
    /// One transmit vector per line: D comma-separated floats (real parts, then imaginary parts)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pass the signal through AWGN at this Eb/N0 (dB)
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "all-bits")]
    eb_convention: EbConvention,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    codebook: String,
    #[arg(long, default_value_t = DEFAULT_CRC_LEN)]
    crc_len: usize,
    /// Received vectors in the encode output format
    #[arg(long)]
    input: PathBuf,
    /// One line per packet: information bits, or CRC_FAIL
    #[arg(long)]
    out: Option<PathBuf>,
    /// Channel Eb/N0 in dB used for the marginals (decisions do not depend on it)
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value = "kbest-crc")]
    mode: String,
    #[arg(long, default_value = "all-bits")]
    eb_convention: EbConvention,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Oracle(a) => oracle::run(a.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_codebook(spec: &str, crc_len: usize) -> Result<Codebook> {
    let source: CodebookSource = spec.parse()?;
    source
        .build(crc_len)
        .with_context(|| format!("loading codebook '{spec}'"))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let params = CodeParams::new(a.layers, a.alphabet, a.dim, a.crc_len)?;
    let config = TrainConfig {
        train_snr_db: a.train_snr,
        batch_size: a.batch,
        steps: a.steps,
        lr_start: a.lr_start,
        lr_end: a.lr_end,
        seed: a.seed,
        log_every: a.log_every,
        eb_convention: a.eb_convention,
        ..TrainConfig::new(params)
    };
    let (codebook, log) = train_with(&config, |e| {
        eprintln!(
            "step {:>7}  loss {:.5}  corr mean {:.5} max {:.5}  lr {:.3e}",
            e.step, e.loss, e.corr_mean, e.corr_max, e.lr
        )
    })?;
    codebook.save(&a.out)?;
    if let Some(path) = &a.log {
        log.write_csv(path)?;
    }
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let cb = load_codebook(&a.codebook, a.crc_len)?;
    let p = *cb.params();
    let corr = cb.cross_correlation();
    let dist = cb.pairwise_distance_stats(a.pairs, a.seed)?;
    let text = match a.format.as_str() {
        "json" => {
            let report = serde_json_report(&p, &corr, &dist, cb.max_energy_error());
            report + "\n"
        }
        "text" => {
            let db = |x: f64| 20.0 * x.log10();
            format!(
                "params            V={} M={} D={} m={} crc={} rate={}\n\
                 row energy error  {:.3e} (relative)\n\
                 cross-correlation max {:.6} ({:.2} dB)  mean {:.6} ({:.2} dB)  count {}\n\
                 pairwise distance pairs {}  min {:.6}  mean {:.6}  max {:.6}\n",
                p.layers,
                p.alphabet,
                p.dim,
                p.bits_per_layer,
                p.crc_len,
                p.rate(),
                cb.max_energy_error(),
                corr.max_abs,
                db(corr.max_abs),
                corr.mean_abs,
                db(corr.mean_abs),
                corr.histogram.total(),
                dist.sample_count,
                dist.min,
                dist.mean,
                dist.max,
            )
        }
        other => bail!("unknown format '{other}' (text | json)"),
    };
    write_output(a.out.as_ref(), &text)
}

fn serde_json_report(
    p: &CodeParams,
    corr: &nos_core::CorrStats,
    dist: &nos_core::DistStats,
    energy_error: f64,
) -> String {
    #[derive(serde::Serialize)]
    struct Report<'a> {
        params: &'a CodeParams,
        rate: f64,
        energy_error: f64,
        cross_correlation: &'a nos_core::CorrStats,
        pairwise_distance: &'a nos_core::DistStats,
    }
    serde_json::to_string_pretty(&Report {
        params: p,
        rate: p.rate(),
        energy_error,
        cross_correlation: corr,
        pairwise_distance: dist,
    })
    .expect("report serializes")
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => SweepConfig::from_kv_file(path)
            .with_context(|| format!("reading {}", path.display()))?,
        None => {
            let Some(codebook) = &a.codebook else {
                bail!("either --config or --codebook is required");
            };
            let Some(ebn0) = &a.ebn0 else {
                bail!("--ebn0 is required without --config");
            };
            let mut cfg = SweepConfig::new(codebook.parse()?, Vec::new());
            cfg.set("ebn0", ebn0)?;
            cfg
        }
    };
    let overrides = [
        ("codebook", a.codebook.clone()),
        ("ebn0", a.ebn0.clone()),
        ("k", a.k.map(|x| x.to_string())),
        ("mode", a.mode.clone()),
        ("seed", a.seed.map(|x| x.to_string())),
        ("trials", a.trials.map(|x| x.to_string())),
        ("target_errors", a.target_errors.map(|x| x.to_string())),
        ("eb_convention", a.eb_convention.clone()),
        ("crc_len", a.crc_len.map(|x| x.to_string())),
        ("workers", a.workers.map(|x| x.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    let format: OutputFormat = a.format.parse()?;
    let curve = run_per_sweep(&cfg)?;
    for p in &curve.points {
        eprintln!(
            "Eb/N0 {:>6.2} dB  trials {:>8}  errors {:>6}  PER {:.4e} ± {:.1e}  BER {:.4e}",
            p.ebn0_db, p.trials, p.packet_errors, p.per, p.ci95, p.ber
        );
    }
    match &a.out {
        Some(path) => emit_results(&curve, path, format)?,
        None => {
            let text = match format {
                OutputFormat::Csv => curve.to_csv(),
                OutputFormat::Json => curve.to_json()?,
            };
            write_output(None, &text)?;
        }
    }
    Ok(())
}

fn parse_bits(line: &str) -> Result<Vec<u8>> {
    line.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => bail!("invalid bit character '{other}'"),
        })
        .collect()
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let cb = load_codebook(&a.codebook, a.crc_len)?;
    let params = *cb.params();
    let crc = CrcSpec::for_params(&params)?;
    let n0 = a.ebn0.map(|db| ebn0_to_n0(db, &params, a.eb_convention));
    let input =
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;

    let mut out = String::new();
    for (n, line) in input.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let info = parse_bits(line).with_context(|| format!("packet {}", n + 1))?;
        if info.len() != params.info_bits() {
            bail!(
                "packet {}: expected {} bits, got {}",
                n + 1,
                params.info_bits(),
                info.len()
            );
        }
        let bits = crc.append(&info);
        let tx = encode(&bits_to_indices(&bits, &params)?, &cb)?;
        let real = match n0 {
            Some(n0) => to_real(&awgn(
                &tx.complex,
                n0,
                &mut NoiseStream::for_trial(a.seed, n as u64),
            )),
            None => tx.real,
        };
        let fields: Vec<String> = real.iter().map(|x| x.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_output(a.out.as_ref(), &out)
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let cb = load_codebook(&a.codebook, a.crc_len)?;
    let params = *cb.params();
    let mode: DecoderMode = a.mode.parse()?;
    let n0 = a
        .ebn0
        .map(|db| ebn0_to_n0(db, &params, a.eb_convention))
        .unwrap_or(1.0);
    if n0 <= 0.0 {
        bail!("Eb/N0 too large: noise power underflows to zero");
    }
    let input =
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;

    let mut out = String::new();
    for (n, line) in input.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let y: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("vector {}", n + 1))?;
        // round-trip through the complex representation validates the length
        let y = to_real(&to_complex(&y)?);
        let lp = map_marginals(&y, &cb, n0)?;
        let bits = match mode {
            DecoderMode::OneShot => Some(indices_to_bits(&hard_decision(&lp), &params)?),
            DecoderMode::KbestCrc => crc_assisted_decode(&lp, a.k, &params)?.bits,
        };
        match bits {
            Some(bits) => {
                out.extend(
                    bits[..params.info_bits()]
                        .iter()
                        .map(|&b| if b == 1 { '1' } else { '0' }),
                );
                out.push('\n');
            }
            None => out.push_str("CRC_FAIL\n"),
        }
    }
    write_output(a.out.as_ref(), &out)
}
