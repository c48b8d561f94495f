//! One line per acceptance criterion. Criteria 1-11 run in-process; 12 runs
//! the `all` subcommand twice through the binary with different worker
//! counts and compares the JSON byte for byte.
//!
//! Exits non-zero only on failures not listed in `KNOWN_FAILURES`.

use std::process::Command;
use std::time::{Duration, Instant};

const SEED: u64 = 20_240_601;

/// Checks that cannot pass as specified, with the reason.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "c1/lp eps=2",
    "the LP is infeasible for eps > 1; the closed form gives 19/18 > 1",
)];

const TITLES: [&str; 12] = [
    "LP optimum equals closed form",
    "Weingarten twirl vs Monte Carlo, commutant",
    "multiplicative sandwich Choi positivity",
    "product-permutation inequality",
    "path-recording oracle",
    "mixed-twirl additive gap non-increasing",
    "HUD collision strategy vs LP bound",
    "falling-factorial ratio",
    "tomography eavesdropper vs agreement",
    "concentration and Lipschitz probe",
    "inequality micro-suite",
    "determinism across worker counts",
];

/// Runtime caps per criterion.
const LIMITS: [u64; 12] = [1, 120, 60, 60, 120, 120, 180, 1, 300, 180, 60, 1200];

fn report(index: usize, pass: bool, elapsed: Duration, detail: &str) -> bool {
    let within = elapsed <= Duration::from_secs(LIMITS[index - 1]);
    let status = if pass { "PASS" } else { "FAIL" };
    let timing = if within { "" } else { " (over time limit)" };
    println!(
        "criterion {index:>2} [{status}] {:<44} {:>9.2?}{timing}  {detail}",
        TITLES[index - 1],
        elapsed
    );
    pass
}

fn main() {
    let mut unexpected = Vec::new();
    for index in 1..=11 {
        let start = Instant::now();
        match haarlab_cli::criterion(index, SEED) {
            Ok((checks, _)) => {
                let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
                let detail = failed
                    .iter()
                    .map(|c| format!("{} value={} bound={}", c.name, c.value, c.bound))
                    .collect::<Vec<_>>()
                    .join("; ");
                let detail = if failed.is_empty() {
                    format!("{} checks", checks.len())
                } else {
                    detail
                };
                report(index, failed.is_empty(), start.elapsed(), &detail);
                for c in failed {
                    match KNOWN_FAILURES.iter().find(|(name, _)| *name == c.name) {
                        Some((_, why)) => println!("             known: {} ({why})", c.name),
                        None => unexpected.push(c.name.clone()),
                    }
                }
            }
            Err(e) => {
                report(index, false, start.elapsed(), &e.to_string());
                unexpected.push(format!("c{index}: {e}"));
            }
        }
    }

    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!("haarlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let mut outputs = Vec::new();
    for workers in [1, 4] {
        let path = dir.join(format!("all-{workers}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_haarlab"))
            .args(["all", "--seed", &SEED.to_string(), "--workers", &workers.to_string(), "--out"])
            .arg(&path)
            .stderr(std::process::Stdio::null())
            .status()
            .expect("run haarlab");
        outputs.push((status.code(), std::fs::read(&path).unwrap_or_default()));
    }
    let identical = !outputs[0].1.is_empty() && outputs[0].1 == outputs[1].1;
    let detail = format!(
        "exit codes {:?}/{:?}, {} bytes",
        outputs[0].0,
        outputs[1].0,
        outputs[0].1.len()
    );
    if !report(12, identical, start.elapsed(), &detail) {
        unexpected.push("c12".into());
    }
    let _ = std::fs::remove_dir_all(&dir);

    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
