use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn occ(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occ"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn occ")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn encode_simulate_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let payload: Vec<u8> = (0u8..30).map(|i| i.wrapping_mul(37) ^ 0x5a).collect();
    fs::write(d.join("in.bin"), &payload).unwrap();
    let cfg = ["--config", "table8_manchester_2k"];
    ok(&occ(
        &[
            &["encode"][..],
            &cfg,
            &["--payload", "in.bin", "--out", "tx.bin"],
        ]
        .concat(),
        d,
    ));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("tx.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["payload_bits_total"], 240);
    assert_eq!(manifest["packets"], 12);
    assert_eq!(manifest["plan"]["repetitions"], 4);
    assert_eq!(manifest["config"]["scheme"], "manchester");

    ok(&occ(
        &[
            &["simulate"][..],
            &cfg,
            &["--chips", "tx.bin", "--out", "frames.csv"],
        ]
        .concat(),
        d,
    ));
    ok(&occ(
        &[
            &["decode"][..],
            &cfg,
            &[
                "--frames",
                "frames.csv",
                "--out",
                "r.json",
                "--payloads-out",
                "rx.bin",
                "--manifest",
                "tx.bin.manifest.json",
            ],
        ]
        .concat(),
        d,
    ));
    assert_eq!(fs::read(d.join("rx.bin")).unwrap(), payload);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["recovered"], 12);
}

#[test]
fn empty_payload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.bin"), b"").unwrap();
    let out = occ(
        &[
            "encode",
            "--config",
            "table5_v1",
            "--payload",
            "empty.bin",
            "--out",
            "c.bin",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "frame_index,start_time_s,row,luma\n0,0.0,0,0.5\n0,0.0,1,oops\n",
    )
    .unwrap();
    let out = occ(
        &[
            "decode",
            "--config",
            "table5_v1",
            "--frames",
            "bad.csv",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = occ(&["config", "no_such_preset"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn config_file_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = occ(&["config", "table5_v2"], dir.path());
    ok(&out);
    fs::write(dir.path().join("c.json"), &out.stdout).unwrap();
    let again = occ(&["config", "c.json"], dir.path());
    ok(&again);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn sweep_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&occ(
        &["sweep", "--out", "s.csv", "--report", "s.txt"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(csv.starts_with("scheme,f_hz,L,OH,eta,bitrate_bps,status"));
    assert_eq!(csv.lines().count(), 1 + 3 * 80);
    assert!(!fs::read_to_string(dir.path().join("s.txt"))
        .unwrap()
        .is_empty());
}

#[test]
fn der_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        [
            "der",
            "--trials",
            "2",
            "--packets",
            "60",
            "--floors",
            "3,6",
            "--seed",
            "9",
            "--out",
            o,
        ]
    };
    ok(&occ(&args("a.csv"), dir.path()));
    ok(&occ(
        &[&args("b.csv")[..], &["--parallel", "1"]].concat(),
        dir.path(),
    ));
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn invalid_v1_config_names_packet_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = occ(&["config", "table5_v1"], dir.path());
    let mut v: serde_json::Value = serde_json::from_slice(&cfg.stdout).unwrap();
    v["packet_rate"] = serde_json::json!(40.0);
    fs::write(dir.path().join("bad.json"), v.to_string()).unwrap();
    let out = occ(
        &["encode", "--config", "bad.json", "--out", "c.bin"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("packet_rate"));
}
