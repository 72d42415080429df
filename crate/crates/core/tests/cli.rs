//! Drives the `fcae` binary through a full gen → train → denoise → sweep →
//! energy → inspect session on a small configuration.

use std::path::Path;
use std::process::Command;

fn fcae(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_fcae"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "fcae {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_session() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let clean = d.join("clean.csv");
    let noisy = d.join("noisy.csv");
    fcae(&[
        "gen",
        "--n-signals",
        "6",
        "--length",
        "300",
        "--seed",
        "1",
        "--out",
        s(&clean),
        "--noisy",
        s(&noisy),
    ]);
    assert_eq!(fcae::pipeline::ingest_csv(&clean).unwrap().len(), 6);

    let config = d.join("exp.toml");
    std::fs::write(
        &config,
        format!(
            "data_source = {:?}\nfrag_len = 30\nepochs = 20\nbatch_size = 4\neta = 0.05\n\
             recompress_every = 10\nsweep_ratios = [0.5, 0.9]\n",
            s(&clean)
        ),
    )
    .unwrap();
    let models = d.join("models");
    let stdout = fcae(&["train", "--config", s(&config), "--out", s(&models)]);
    assert!(stdout.contains("output SNR"), "{stdout}");
    let ck = models.join("model_alpha_1.fcae");
    assert!(ck.exists() && ck.with_extension("json").exists());

    let denoised = d.join("denoised.csv");
    let stdout = fcae(&[
        "denoise",
        "--checkpoint",
        s(&ck),
        "--input",
        s(&noisy),
        "--clean",
        s(&clean),
        "--out",
        s(&denoised),
    ]);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("signal")).count(),
        6
    );
    let out = fcae::pipeline::ingest_csv(&denoised).unwrap();
    assert!(out.iter().all(|x| x.len() == 300));

    let report = d.join("report");
    let stdout = fcae(&[
        "--threads",
        "1",
        "sweep",
        "--checkpoint",
        s(&ck),
        "--config",
        s(&config),
        "--layers",
        "1,2,3,4;2,3",
        "--out",
        s(&report),
    ]);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("alpha")).count(), 4);
    let csv = std::fs::read_to_string(report.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let stdout = fcae(&["energy", "--checkpoint", s(&ck), "--out", s(&report)]);
    assert_eq!(stdout.lines().filter(|l| l.starts_with('W')).count(), 4);
    assert!(report.join("energy.csv").exists());

    let stdout = fcae(&["inspect", "--checkpoint", s(&ck)]);
    assert!(stdout.contains("N        30"), "{stdout}");
}

#[test]
fn missing_alpha_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = d.join("exp.toml");
    std::fs::write(
        &config,
        "n_signals = 4\nsignal_length = 100\nfrag_len = 20\nepochs = 2\nrecompress_every = 0\n",
    )
    .unwrap();
    fcae(&["train", "--config", s(&config), "--out", s(d)]);
    let out = Command::new(env!("CARGO_BIN_EXE_fcae"))
        .args([
            "sweep",
            "--checkpoint",
            s(&d.join("model_alpha_1.fcae")),
            "--alpha",
            "1.5",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}
