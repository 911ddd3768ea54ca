use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nosc"))
        .args(args)
        .output()
        .expect("nosc runs")
}

fn ok(args: &[&str]) -> String {
    let out = nosc(args);
    assert!(
        out.status.success(),
        "nosc {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

// 4 layers x 4 bits = 16 bits, 5 info bits after CRC11
const ORTHO: &str = "orthogonal:4,16,64:3";

#[test]
fn train_writes_loadable_codebook_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let cb = dir.path().join("cb.bin");
    let log = dir.path().join("log.csv");
    ok(&[
        "train",
        "-V",
        "2",
        "-M",
        "16",
        "-D",
        "16",
        "--crc-len",
        "6",
        "--steps",
        "20",
        "--batch",
        "32",
        "--log-every",
        "10",
        "--lr-start",
        "1e-2",
        "--lr-end",
        "1e-3",
        "--out",
        s(&cb),
        "--log",
        s(&log),
    ]);
    let text = fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("step,loss,corr_mean,corr_max,lr\n"));
    let loaded = nos_core::Codebook::load_with_crc(&cb, 6).unwrap();
    assert_eq!(loaded.params().alphabet, 16);
    assert!(loaded.max_energy_error() < 1e-12);

    let report = ok(&[
        "analyze",
        "--codebook",
        s(&cb),
        "--crc-len",
        "6",
        "--pairs",
        "100",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["params"]["layers"], 2);
}

#[test]
fn analyze_text_reports_orthogonality() {
    let out = ok(&["analyze", "--codebook", ORTHO, "--pairs", "200"]);
    assert!(out.contains("V=4 M=16 D=64"), "{out}");
    assert!(out.contains("cross-correlation max 0.000000"), "{out}");
}

#[test]
fn sweep_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&[
        "sweep",
        "--codebook",
        "random:3,64,32:1",
        "--ebn0",
        "0:4:2",
        "--trials",
        "400",
        "--target-errors",
        "20",
        "--k",
        "16",
        "--seed",
        "4",
    ]);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("ebn0_db,trials,packet_errors,bit_errors,per,ber,ci95")
    );
    assert_eq!(lines.count(), 3);

    let json_path = dir.path().join("curve.json");
    ok(&[
        "sweep",
        "--codebook",
        "random:3,64,32:1",
        "--ebn0",
        "0:4:2",
        "--trials",
        "400",
        "--target-errors",
        "20",
        "--k",
        "16",
        "--seed",
        "4",
        "--format",
        "json",
        "--out",
        s(&json_path),
    ]);
    let curve = nos_core::PerCurve::from_json(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(curve.points.len(), 3);
    assert_eq!(curve.to_csv(), csv);
}

#[test]
fn sweep_reads_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "# desk sweep\ncodebook = random:3,64,32:1\nebn0 = 1,2\ntrials = 300\ntarget_errors = 10\nmode = one-shot\n",
    )
    .unwrap();
    let out = ok(&["sweep", "--config", s(&cfg), "--ebn0", "3"]);
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().nth(1).unwrap().starts_with("3,"));
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("bits.txt");
    let tx = dir.path().join("tx.txt");
    let rx = dir.path().join("rx.txt");
    let packets = ["00000", "10110", "11111", "01001"];
    fs::write(&bits, packets.join("\n") + "\n").unwrap();

    ok(&[
        "encode",
        "--codebook",
        ORTHO,
        "--input",
        s(&bits),
        "--out",
        s(&tx),
    ]);
    let vectors = fs::read_to_string(&tx).unwrap();
    assert_eq!(vectors.lines().count(), 4);
    assert_eq!(vectors.lines().next().unwrap().split(',').count(), 64);

    ok(&[
        "decode",
        "--codebook",
        ORTHO,
        "--input",
        s(&tx),
        "--out",
        s(&rx),
    ]);
    assert_eq!(
        fs::read_to_string(&rx).unwrap().lines().collect::<Vec<_>>(),
        packets
    );

    // high-SNR noisy channel still decodes on an orthogonal codebook
    ok(&[
        "encode",
        "--codebook",
        ORTHO,
        "--input",
        s(&bits),
        "--out",
        s(&tx),
        "--ebn0",
        "12",
        "--seed",
        "7",
    ]);
    let decoded = ok(&[
        "decode",
        "--codebook",
        ORTHO,
        "--input",
        s(&tx),
        "--ebn0",
        "12",
    ]);
    assert_eq!(decoded.lines().collect::<Vec<_>>(), packets);
}

#[test]
fn decode_flags_crc_failure() {
    let dir = tempfile::tempdir().unwrap();
    let rx = dir.path().join("rx.txt");
    // zero payload with a nonzero check field can never pass the CRC
    let cb: nos_core::CodebookSource = ORTHO.parse().unwrap();
    let cb = cb.build(11).unwrap();
    let tx = nos_core::codec::encode(&[0, 0, 0, 1], &cb).unwrap();
    let line: Vec<String> = tx.real.iter().map(|x| x.to_string()).collect();
    fs::write(&rx, line.join(",") + "\n").unwrap();

    let out = ok(&["decode", "--codebook", ORTHO, "--input", s(&rx), "--k", "1"]);
    assert_eq!(out, "CRC_FAIL\n");
    let out = ok(&[
        "decode",
        "--codebook",
        ORTHO,
        "--input",
        s(&rx),
        "--mode",
        "one-shot",
    ]);
    assert_eq!(out, "00000\n");
}

#[test]
fn oracle_passes() {
    let out = ok(&["oracle", "--seed", "3"]);
    assert_eq!(
        out.lines().filter(|l| l.starts_with("[PASS]")).count(),
        5,
        "{out}"
    );
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("bits.txt");
    let missing = dir.path().join("missing.bin");
    fs::write(&bits, "0101\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["encode", "--codebook", ORTHO, "--input", s(&bits)],
        vec!["analyze", "--codebook", "random:3,48,32"],
        vec!["analyze", "--codebook", s(&missing)],
        vec![
            "sweep",
            "--codebook",
            "random:3,64,32",
            "--ebn0",
            "0",
            "--mode",
            "sometimes",
        ],
        vec!["sweep", "--ebn0", "0"],
    ];
    for args in cases {
        let out = nosc(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).starts_with("error:"),
            "{args:?}"
        );
    }
}
