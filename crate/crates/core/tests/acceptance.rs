//! Acceptance suite: one verdict line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use interleave::validation::{self, Check, Settings, DETERMINISM_CONFIG};

fn cli_determinism() -> Vec<Check> {
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, DETERMINISM_CONFIG).expect("write config");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_interleave"))
            .arg("sweep")
            .arg(&cfg)
            .arg("--output")
            .arg(&out)
            .status()
            .expect("spawn interleave");
        assert!(status.success(), "sweep run {run} failed");
        outputs.push(std::fs::read(&out).expect("read csv"));
    }
    let same = outputs[0] == outputs[1];
    vec![Check {
        id: "9".into(),
        value: if same { 0.0 } else { 1.0 },
        threshold: 0.0,
        passed: same,
        detail: format!("two CLI sweeps, {} bytes each", outputs[0].len()),
    }]
}

fn main() -> ExitCode {
    let s = Settings::full();
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |n: u32, title: &str, checks: interleave::Result<Vec<Check>>| {
        let line = match checks {
            Ok(checks) => {
                let ok = checks.iter().all(|c| c.passed);
                let parts: Vec<String> = checks
                    .iter()
                    .map(|c| format!("{}={:.4e} (threshold {:e}, {})", c.id, c.value, c.threshold, if c.passed { "ok" } else { "FAIL" }))
                    .collect();
                if !ok {
                    failed += 1;
                }
                for c in &checks {
                    eprintln!("    {}: {}", c.id, c.detail);
                }
                format!("criterion {n} [{}] {title}: {}", if ok { "PASS" } else { "FAIL" }, parts.join("; "))
            }
            Err(e) => {
                failed += 1;
                format!("criterion {n} [FAIL] {title}: error {e}")
            }
        };
        println!("{line}");
    };

    report(1, "analytic vs Monte Carlo", validation::analytic_agreement(&s));
    report(2, "eigenvalue approximations", validation::approximation_quality());
    report(3, "fast-path conditioning", validation::fast_path_equivalence(s.seed));
    report(4, "special-function oracles", validation::special_function_oracles(&s));
    report(5, "asymptotic laws", validation::asymptotic_laws());
    let runs = validation::scheme_runs(&s);
    match runs {
        Ok(runs) => {
            report(6, "modified beats basic", Ok(validation::scheme_improvement(&runs)));
            report(7, "length vs M and outage equality", validation::shape_claims(&runs));
        }
        Err(e) => {
            report(6, "modified beats basic", Err(e.clone()));
            report(7, "length vs M and outage equality", Err(e));
        }
    }
    report(8, "surrogate regressor", validation::surrogate_quality(&s));
    report(9, "byte-stable sweeps", Ok(cli_determinism()));

    println!("acceptance: {} of 9 criteria failed ({:.1} s)", failed, started.elapsed().as_secs_f64());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
