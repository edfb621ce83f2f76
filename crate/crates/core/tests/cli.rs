use std::path::Path;
use std::process::{Command, Output};

use hetnet::frame::{encode_frame, MacFrame};
use hetnet::harness::{codec_decode, codec_encode, CodecFields};
use hetnet::platform::{InteropConfig, PlatformId};
use proptest::prelude::*;
use tempfile::TempDir;

fn hetnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetnet"))
        .args(args)
        .current_dir(dir)
        .env_remove("HETNET_SEED")
        .output()
        .unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn lines(path: impl AsRef<Path>) -> usize {
    read(path).lines().count()
}

fn scenario(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const QUICK: &str = "beacons_per_run = 120\nrepetitions = 2\n";

#[test]
fn default_run_then_check_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetnet(&["run"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let metrics = dir.path().join("out/metrics.csv");
    assert_eq!(lines(&metrics), 961);
    assert_eq!(
        read(&metrics).lines().next().unwrap(),
        "tx_platform,rx_platform,distance_m,payload_bytes,sent,received,rx_pps,loss_pct,rssi_mean_dbm,rssi_raw_mean"
    );
    assert_eq!(lines(dir.path().join("out/drops.csv")), 961);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report, read(dir.path().join("out/findings.txt")));
    assert_eq!(report.lines().count(), 8);
    assert!(
        report
            .lines()
            .all(|l| l.split_whitespace().nth(1) == Some("pass")),
        "{report}"
    );

    let check = hetnet(&["check"], dir.path());
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(String::from_utf8(check.stdout).unwrap(), report);

    let jsonl = hetnet(&["check", "--format", "jsonl"], dir.path());
    for line in String::from_utf8(jsonl.stdout).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["status"], "pass", "{line}");
    }

    let export = hetnet(&["export", "--axis", "pps"], dir.path());
    assert!(export.status.success());
    let plots = dir.path().join("out/plots");
    for d in ["1", "3", "8.5"] {
        let p = plots.join(format!("pps_{d}m.csv"));
        assert_eq!(lines(&p), 21, "{}", p.display());
    }

    let export = hetnet(&["export", "--axis", "loss", "--rx", "isense"], dir.path());
    assert!(export.status.success());
    let loss = read(plots.join("loss_8.5m.csv"));
    let header: Vec<&str> = loss.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 5);
    assert!(
        header[1..].iter().all(|h| h.ends_with(">isense")),
        "{header:?}"
    );
    for row in loss.lines().skip(1) {
        assert!(row.split(',').skip(1).all(|v| v == "0"), "{row}");
    }

    let export = hetnet(&["export", "--axis", "rssi"], dir.path());
    assert!(export.status.success());
    let rssi = read(plots.join("rssi_1m.csv"));
    let header = rssi.lines().next().unwrap();
    assert!(header.contains("telosb>sunspot:dbm") && header.contains("telosb>sunspot:raw"));
}

#[test]
fn single_distance_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(&dir, "one.toml", &format!("{QUICK}distances_m = [1.0]\n"));
    let out = hetnet(&["run", "--scenario", &sc], dir.path());
    // Far-distance findings have no cells to judge.
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(lines(dir.path().join("out/metrics.csv")), 321);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(&dir, "q.toml", QUICK);
    let run = |seed: &str, out: &str| {
        hetnet(
            &["run", "--scenario", &sc, "--seed", seed, "--out", out],
            dir.path(),
        );
        std::fs::read(dir.path().join(out).join("metrics.csv")).unwrap()
    };
    let a = run("7", "a");
    assert_eq!(a, run("7", "b"));
    assert_ne!(a, run("8", "c"));

    let env_run = Command::new(env!("CARGO_BIN_EXE_hetnet"))
        .args(["run", "--scenario", &sc, "--out", "d"])
        .env("HETNET_SEED", "7")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(env_run.status.code().is_some());
    assert_eq!(std::fs::read(dir.path().join("d/metrics.csv")).unwrap(), a);
}

#[test]
fn restart_ablation_fails_its_checks() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(&dir, "ab.toml", "disable_restart = [\"arduino-xbee\"]\n");
    let out = hetnet(&["run", "--scenario", &sc], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    let failed: Vec<&str> = report
        .lines()
        .filter(|l| l.split_whitespace().nth(1) == Some("fail"))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(failed, ["arduino-restart", "sunspot-buffering"], "{report}");
}

#[test]
fn unreadable_profiles_are_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetnet(&["run", "--profiles", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
    assert!(!dir.path().join("out/metrics.csv").exists());

    std::fs::write(dir.path().join("bad.toml"), "format_version = 1\n").unwrap();
    let out = hetnet(&["run", "--profiles", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let sc = scenario(&dir, "typo.toml", "beacons = 3\n");
    let out = hetnet(&["run", "--scenario", &sc], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn calibrate_reproduces_shipped_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetnet(&["calibrate", "--out", "cal"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        read(dir.path().join("cal/profiles.toml")),
        include_str!("../profiles/default.toml")
    );
    assert!(dir.path().join("cal/calibration_report.txt").exists());
}

#[test]
fn codec_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let enc = hetnet(
        &[
            "codec",
            "encode",
            "--platform",
            "arduino-xbee",
            "dest=ffff",
            "payload=0a0b",
        ],
        dir.path(),
    );
    let hex = String::from_utf8(enc.stdout).unwrap();
    assert_eq!(hex.trim(), "7e00090101ffff0041000a0ba9");

    let dec = hetnet(
        &["codec", "decode", "--platform", "arduino-xbee", hex.trim()],
        dir.path(),
    );
    let text = String::from_utf8(dec.stdout).unwrap();
    assert!(
        text.contains("checksum=ok") && text.contains("payload=0a0b"),
        "{text}"
    );

    let bad = hetnet(
        &[
            "codec",
            "decode",
            "--platform",
            "arduino-xbee",
            "7e00090101ffff0041000a0baa",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("checksum"));

    let foreign = encode_frame(&MacFrame::short_data(
        1,
        0x1234,
        0xFFFF,
        3,
        vec![0x42, 0x00, 1],
    ))
    .unwrap();
    let no_dispatch = hetnet(
        &[
            "codec",
            "decode",
            "--platform",
            "telosb",
            &hex::encode(foreign),
        ],
        dir.path(),
    );
    assert_eq!(no_dispatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_dispatch.stderr).contains("dispatch"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn codec_tool_round_trip(
        p in prop::sample::select(PlatformId::ALL.to_vec()),
        seq in any::<u8>(),
        dest in any::<u16>(),
        payload in proptest::collection::vec(any::<u8>(), 0..=40),
    ) {
        let cfg = InteropConfig::default();
        let fields = CodecFields {
            seq: Some(seq),
            dest: Some(dest),
            payload: payload.clone(),
            ..CodecFields::default()
        };
        let hex = codec_encode(p, &fields, &cfg).unwrap();
        let dump = codec_decode(p, &hex, &cfg).unwrap();
        prop_assert_eq!(&dump.fields.payload, &payload);
        prop_assert_eq!(dump.fields.dest, Some(dest));
        let text = dump.to_string();
        let reparsed: CodecFields = text.parse().unwrap();
        prop_assert_eq!(reparsed.payload, payload);
    }
}
