//! End-to-end checks of the binary: exit codes, file outputs, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gen2phy"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gen2phy-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("params.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should run")
}

const UPLINK_320K: &str = "tari_s=6.25e-6\nrtcal_s=15.625e-6\ntrcal_s=25e-6\ndr=8\nm=1\n";

#[test]
fn params_reports_link_frequency() {
    let dir = tmp("params");
    let cfg = write_config(&dir, UPLINK_320K);
    let out = run(bin().args(["params", "--config"]).arg(&cfg));
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("parameters valid"), "{text}");
    // DR=8 / 25us = 320 kbps uplink
    assert!(text.contains("320.000000 kbps"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn params_5kbps_corner() {
    let dir = tmp("params5k");
    let cfg = write_config(&dir, "tari_s=25e-6\nrtcal_s=70e-6\ntrcal_s=200e-6\ndr=8\nm=8\n");
    let out = run(bin().args(["params", "--config"]).arg(&cfg));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("5.000000 kbps"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn params_invalid_tari_exits_2_naming_constraint() {
    let dir = tmp("paramsbad");
    let cfg = write_config(&dir, UPLINK_320K);
    let out = run(bin()
        .args(["params", "--config"])
        .arg(&cfg)
        .args(["--set", "tari_s=5e-6"]));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tari outside"), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn downlink_roundtrip_writes_four_taps() {
    let dir = tmp("downlink");
    let out = run(bin()
        .args(["downlink-roundtrip", "--output-dir"])
        .arg(&dir));
    assert!(out.status.success(), "{out:?}");
    for name in ["envelope.txt", "trigger.txt", "clock.txt", "diff_clock.txt"] {
        let p = dir.join(name);
        assert!(p.exists(), "missing {name}");
        let head = std::fs::read_to_string(&p).unwrap();
        assert!(head.starts_with("# sample_rate_hz="), "{name} header");
    }
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("recovered 6 bits exactly"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn downlink_pr_ask_succeeds() {
    let dir = tmp("downlinkpr");
    let out = run(bin()
        .args(["downlink-roundtrip", "--modulation", "pr-ask", "--output-dir"])
        .arg(&dir));
    assert!(out.status.success(), "{out:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn downlink_heavy_noise_fails_with_exit_3() {
    let dir = tmp("downlinknoise");
    let out = run(bin()
        .args([
            "downlink-roundtrip",
            "--ebn0",
            "0",
            "--seed",
            "7",
            "--output-dir",
        ])
        .arg(&dir));
    // 0 dB is far below the reliable operating point of noncoherent
    // envelope detection: this is the documented noise-failure path.
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn ber_sweep_csv_shape_and_determinism() {
    let dir_a = tmp("ber-a");
    let dir_b = tmp("ber-b");
    for dir in [&dir_a, &dir_b] {
        let out = run(bin()
            .args([
                "ber-sweep",
                "--code",
                "fm0",
                "--ebn0",
                "0:2:12",
                "--bits",
                "20000",
                "--seed",
                "5",
                "--output-dir",
            ])
            .arg(dir));
        assert!(out.status.success(), "{out:?}");
    }
    let a = std::fs::read(dir_a.join("ber.csv")).unwrap();
    let b = std::fs::read(dir_b.join("ber.csv")).unwrap();
    assert_eq!(a, b, "reruns with one seed must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ebn0_db,trials,errors,measured,theoretical,ci_lo,ci_hi"
    );
    assert_eq!(lines.count(), 7, "0:2:12 gives 7 rows");
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn ber_sweep_self_check_passes() {
    let dir = tmp("berself");
    let out = run(bin()
        .args([
            "ber-sweep",
            "--code",
            "miller",
            "--m",
            "2",
            "--ebn0",
            "2,6",
            "--bits",
            "50000",
            "--seed",
            "3",
            "--self-check",
            "--output-dir",
        ])
        .arg(&dir));
    assert!(out.status.success(), "{out:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn preamble_sweep_pe_override() {
    let dir = tmp("preamble");
    let out = run(bin()
        .args([
            "preamble-sweep",
            "--n",
            "6",
            "--ebn0",
            "6,10",
            "--trials",
            "2000",
            "--seed",
            "2",
            "--pe-override",
            "0.5",
            "--output-dir",
        ])
        .arg(&dir));
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(dir.join("preamble.csv")).unwrap();
    for line in text.lines().skip(1) {
        let theoretical: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((theoretical - 0.015625).abs() < 1e-9, "{line}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn backscatter_demo_dumps_and_recovers() {
    let dir = tmp("backscatter");
    let out = run(bin()
        .args(["backscatter-demo", "--bits", "11001001", "--output-dir"])
        .arg(&dir));
    assert!(out.status.success(), "{out:?}");
    for name in [
        "encoded_baseband.txt",
        "backscattered_rf.txt",
        "mixer_output.txt",
    ] {
        assert!(dir.join(name).exists(), "missing {name}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn backscatter_quadrature_lo_fails_with_exit_3() {
    let dir = tmp("backscatter90");
    let out = run(bin()
        .args([
            "backscatter-demo",
            "--lo-phase",
            "90",
            "--output-dir",
        ])
        .arg(&dir));
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_scheme_exits_2() {
    let dir = tmp("badscheme");
    let out = run(bin()
        .args(["downlink-roundtrip", "--modulation", "fm-ask", "--output-dir"])
        .arg(&dir));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    std::fs::remove_dir_all(&dir).ok();
}
