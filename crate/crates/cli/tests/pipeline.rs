//! End-to-end pipeline tests through the actual binary: determinism of the
//! emitted artifacts, exit-status categories, and the analyze report.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tlsim"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tlsim-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"))
}

#[test]
fn generate_simulate_analyze_deterministic() {
    let dir = tmpdir("roundtrip");
    let out_a = dir.join("a");
    let out_b = dir.join("b");

    for out in [&out_a, &out_b] {
        // small, fast ensemble: lowered density, same pipeline
        let status = bin()
            .args([
                "generate",
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
                "--set",
                "qtls_density_per_ghz_um3=20",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let status = bin()
            .args([
                "simulate",
                "--preset",
                "dataset2",
                "--seed",
                "7",
                "--input",
                out.join("ensemble.json").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--set",
                "qtls_density_per_ghz_um3=20",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        read(&out_a.join("ensemble.json")),
        read(&out_b.join("ensemble.json")),
        "ensemble files differ between identical runs"
    );
    assert_eq!(
        read(&out_a.join("chart.txt")),
        read(&out_b.join("chart.txt")),
        "chart files differ between identical runs"
    );

    // serial evaluation produces the identical chart bytes
    let out_s = dir.join("serial");
    let status = bin()
        .args([
            "simulate",
            "--preset",
            "dataset2",
            "--seed",
            "7",
            "--input",
            out_a.join("ensemble.json").to_str().unwrap(),
            "--out",
            out_s.to_str().unwrap(),
            "--set",
            "qtls_density_per_ghz_um3=20",
            "--set",
            "serial=true",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read(&out_a.join("chart.txt")), read(&out_s.join("chart.txt")));

    // analyze the chart; re-running is idempotent
    let status = bin()
        .args([
            "analyze",
            "--input",
            out_a.join("chart.txt").to_str().unwrap(),
            "--column",
            "3",
            "--out",
            out_a.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report1 = read(&out_a.join("report.txt"));
    let status = bin()
        .args([
            "analyze",
            "--input",
            out_a.join("chart.txt").to_str().unwrap(),
            "--column",
            "3",
            "--out",
            out_a.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(report1, read(&out_a.join("report.txt")), "analyze is not idempotent");
    let text = String::from_utf8(report1).unwrap();
    assert!(text.contains("[allan_fit]"));
    assert!(text.contains("[psd]"));
    assert!(text.contains("config_digest"));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scenario_pipeline_and_report() {
    let dir = tmpdir("scenario");
    let scenario = dir.join("one.toml");
    std::fs::write(
        &scenario,
        "[[qtls]]\nfreq_ghz = 4.5011\ng_mhz = 0.04\ngamma1_mhz = 15.0\n\
         ttls = [{ gamma_hz = 100e-6, shift_mhz = 0.6 }]\n",
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args([
            "scenario",
            "--scenario",
            scenario.to_str().unwrap(),
            "--preset",
            "dataset3",
            "--seed",
            "15",
            "--out",
            out.to_str().unwrap(),
            "--render",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("chart.txt").exists());
    assert!(out.join("chart.txt.meta").exists());
    assert!(out.join("traces.txt").exists());
    assert!(out.join("chart.png").exists());

    // the trace dwells at exactly two levels split by twice the shift
    let traces = std::fs::read_to_string(out.join("traces.txt")).unwrap();
    let mut levels = std::collections::BTreeSet::new();
    for line in traces.lines().skip(1) {
        let f: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        levels.insert((f - 4.5011e9) as i64);
    }
    assert!(levels.len() <= 2, "more than two telegraph levels: {levels:?}");

    let status = bin()
        .args([
            "analyze",
            "--input",
            out.join("chart.txt").to_str().unwrap(),
            "--column",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("converged = true"), "report:\n{report}");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_by_category() {
    let dir = tmpdir("exitcodes");

    // unknown config key -> config error (2)
    let status = bin()
        .args(["generate", "--out", dir.to_str().unwrap(), "--set", "bogus_key=1"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("bogus_key"));

    // unknown preset -> config error (2)
    let status = bin()
        .args(["simulate", "--preset", "dataset9", "--input", "x.json"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // missing input file -> io error (3)
    let status = bin()
        .args([
            "simulate",
            "--input",
            dir.join("missing.json").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));

    // constant series: analysis runs, fit failure is reported gracefully
    let series = dir.join("flat.txt");
    std::fs::write(&series, "2.7e-5\n".repeat(128)).unwrap();
    let out = bin()
        .args([
            "analyze",
            "--input",
            series.to_str().unwrap(),
            "--dt",
            "1000",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("converged = false"));

    std::fs::remove_dir_all(&dir).ok();
}
