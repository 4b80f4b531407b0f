//! End-to-end behaviour of the `ek` binary: exit codes, deterministic
//! outputs, cache integrity and manifests.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ek(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ek"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning ek")
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // A clean check: status 0.
    let out = ek(
        dir,
        &[
            "check", "--family", "uniform", "--n", "1000", "--C", "0", "--D", "0",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // The harmonic constants hold at scale.
    let out = ek(
        dir,
        &[
            "check", "--family", "harmonic", "--n", "100000", "--C", "1", "--D", "1", "--max-k",
            "4",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // The negative control trips the constraint-failure status.
    let out = ek(
        dir,
        &["control", "--p", "2", "--schedule", "1000,10000,100000"],
    );
    assert_eq!(out.status.code(), Some(2));

    // A failed asserted constant also exits 2 (zeroing a prime needs C > 0).
    let out = ek(
        dir,
        &["check", "--family", "zeroed[2]", "--n", "1000", "--C", "0"],
    );
    assert_eq!(out.status.code(), Some(2));

    // Usage problems exit 1.
    let out = ek(dir, &["check", "--family", "wat(", "--n", "100"]);
    assert_eq!(out.status.code(), Some(1));
    let out = ek(
        dir,
        &["check", "--family", "uniform", "--n", "100", "--bogus", "1"],
    );
    assert_eq!(out.status.code(), Some(1));

    // Help is not an error.
    let out = ek(dir, &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn repeated_runs_emit_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args = |out: &str| {
        vec![
            "check".to_string(),
            "--family".into(),
            "harmonic".into(),
            "--n".into(),
            "2000".into(),
            "--C".into(),
            "1".into(),
            "--D".into(),
            "1".into(),
            "--out-dir".into(),
            out.into(),
        ]
    };
    for out in ["a", "b"] {
        let argv: Vec<String> = args(out);
        let argv: Vec<&str> = argv.iter().map(|s| s.as_str()).collect();
        assert_eq!(ek(dir, &argv).status.code(), Some(0));
    }
    for name in ["check_c4.csv", "check_c5.csv", "summary.json"] {
        let a = fs::read(dir.join("a").join(name)).unwrap();
        let b = fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for (threads, tag) in [("1", "t1"), ("4", "t4")] {
        let out = ek(
            dir,
            &[
                "cdf",
                "--family",
                "uniform",
                "--n",
                "60000",
                "--threads",
                threads,
                "--out-dir",
                tag,
                "--cache-dir",
                tag,
            ],
        );
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    let a = fs::read(dir.join("t1/cdf.csv")).unwrap();
    let b = fs::read(dir.join("t4/cdf.csv")).unwrap();
    assert_eq!(a, b, "cdf.csv differs across thread counts");
    let a = fs::read(dir.join("t1/omega_60000_full.ekw")).unwrap();
    let b = fs::read(dir.join("t4/omega_60000_full.ekw")).unwrap();
    assert_eq!(a, b, "sieve caches differ across thread counts");
}

#[test]
fn corrupted_cache_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ek(dir, &["sieve", "--limit", "50000", "--cache-dir", "cache"]);
    assert_eq!(out.status.code(), Some(0));

    let cache = dir.join("cache/omega_50000_full.ekw");
    let mut bytes = fs::read(&cache).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    fs::write(&cache, bytes).unwrap();

    let out = ek(
        dir,
        &[
            "cdf",
            "--family",
            "uniform",
            "--n",
            "50000",
            "--cache-dir",
            "cache",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("digest mismatch"), "stderr: {stderr}");
}

#[test]
fn manifest_describes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ek(
        dir,
        &[
            "cdf",
            "--family",
            "harmonic",
            "--n",
            "10000",
            "--out-dir",
            "out",
            "--cache-dir",
            "cache",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], "ek-lab/1");
    assert_eq!(manifest["command"], "cdf");
    assert_eq!(manifest["config"]["command"]["cdf"]["family"], "harmonic");
    let outputs: Vec<String> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(outputs.contains(&"cdf.csv".to_string()));
    assert!(outputs.contains(&"cdf.gp".to_string()));
    assert!(outputs.contains(&"summary.json".to_string()));
    let digests = manifest["cache_digests"].as_array().unwrap();
    assert_eq!(digests.len(), 1);
    assert_eq!(digests[0]["sha256"].as_str().unwrap().len(), 64);

    // A second run reuses the cache and records the same digest.
    let out = ek(
        dir,
        &[
            "cdf",
            "--family",
            "harmonic",
            "--n",
            "10000",
            "--out-dir",
            "out2",
            "--cache-dir",
            "cache",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let manifest2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out2/manifest.json")).unwrap()).unwrap();
    assert_eq!(
        manifest["cache_digests"][0]["sha256"],
        manifest2["cache_digests"][0]["sha256"]
    );
    let a = fs::read(dir.join("out/cdf.csv")).unwrap();
    let b = fs::read(dir.join("out2/cdf.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gnuplot_script_references_the_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ek(
        dir,
        &[
            "cdf",
            "--family",
            "uniform",
            "--n",
            "5000",
            "--out-dir",
            "out",
            "--cache-dir",
            "cache",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let script = fs::read_to_string(dir.join("out/cdf.gp")).unwrap();
    assert!(script.contains("plot 'cdf.csv'"));
    assert!(script.contains("with steps"));
}
