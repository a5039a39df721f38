use std::fs;
use std::process::{Command, Output};

fn interleave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interleave")).args(args).output().expect("spawn interleave")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn analytic_rows_match_paper_threshold() {
    let out = interleave(&["analytic", "--rho", "0.8", "--scheme", "basic-beam", "--r-th", "3", "--p-db", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), interleave::sweep::CSV_HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..5], ["exponential", "0.8", "32", "basic-beam", "7"]);
    assert!(row[6].is_empty());
}

#[test]
fn zero_threshold_gives_one_in_both_columns() {
    let out = interleave(&["simulate", "--rho", "0.4", "--antennas", "8", "--scheme", "modified-antenna", "--alpha", "0", "--trials", "50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[6], "1");
    let out = interleave(&["analytic", "--rho", "0.4", "--antennas", "8", "--scheme", "basic-antenna", "--alpha", "0"]);
    assert_eq!(stdout(&out).lines().nth(1).unwrap().split(',').nth(5), Some("1"));
}

#[test]
fn sweep_is_byte_stable_and_honours_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "model = one-ring\ntheta_bar_deg = 45\nas_deg = 10\nnodes = 256\nantennas = 8\nschemes = basic-antenna, modified-beam\nalpha = 5\ntrials = 300\nseed = 3\n").unwrap();
    let a = interleave(&["sweep", cfg.to_str().unwrap()]);
    let b = interleave(&["sweep", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let target = dir.path().join("out.csv");
    let c = interleave(&["sweep", cfg.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert!(c.status.success() && c.stdout.is_empty());
    assert_eq!(fs::read(&target).unwrap(), a.stdout);
}

#[test]
fn config_errors_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model = exponential\nrho = 0.3\nwidth = 2\n").unwrap();
    let out = interleave(&["sweep", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(interleave(&["sweep", "fig99"]).status.code(), Some(2));
}

#[test]
fn presets_parse() {
    for name in interleave::config::PRESET_NAMES {
        let out = interleave(&["sweep", name, "--print-config"]);
        assert!(out.status.success(), "{name}");
        interleave::config::parse_config(&stdout(&out)).unwrap();
    }
}

#[test]
fn surrogate_fit_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("net.txt");
    let cfg = dir.path().join("fit.cfg");
    fs::write(
        &cfg,
        format!("antennas = 8\nrho = 0, 0.3, 0.6\nalpha = 0, 2, 4, 6\ntrials = 100\nepochs = 200\noutput = {}\n", model.display()),
    )
    .unwrap();
    let out = interleave(&["fit-surrogate", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("best_epoch,"));

    let inside = interleave(&["predict", model.to_str().unwrap(), "0.3", "3"]);
    assert!(inside.status.success());
    let v: f64 = stdout(&inside).trim().parse().unwrap();
    assert!((1.0..=8.0).contains(&v));
    assert!(inside.stderr.is_empty());
    let loaded = interleave::surrogate::RegressorModel::load(&model).unwrap();
    assert_eq!(loaded.predict(0.3, 3.0), v);

    let outside = interleave(&["predict", model.to_str().unwrap(), "0.3", "80"]);
    assert!(outside.status.success());
    assert!(String::from_utf8_lossy(&outside.stderr).contains("outside the training domain"));
}
