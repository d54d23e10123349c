//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the verdict lines are always printed.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use avmerge_core::harness::{
    alpha_threshold_suite, boundary_residual_suite, brute_force_with, compare_with_oracle,
    energy_decrease_suite, energy_regime_suite, energy_suite, random_scenario, time_regime_suite,
    window_soundness_suite, OracleOptions, ScenarioRanges, SuiteReport, VerifyConfig, TIE_REL_TOL,
};
use avmerge_core::{optimal_index, BehaviorModel, ConstraintLimits, Hdv, Scenario, VehicleState};

const BOUNDARY_INSTANCES: u64 = 1000;
const ENERGY_TIME_LIMIT: Duration = Duration::from_secs(1);
const WINDOW_SEEDS: u64 = 200;
const WINDOW_POINTS_PER_SEED: usize = 50;
const ORACLE_SCENARIOS: u64 = 200;
const ORACLE_GRID: (usize, usize) = (512, 512);
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);
const RULE_SCENARIOS: usize = 100;
/// Seeds scanned while collecting scenarios inside a rule's premise.
const RULE_SEED_BUDGET: u64 = 5000;
const MERGE_FIRST_MIN: usize = 20;
const SLOPE_TRIPLES: u64 = 100;
const SLOPE_POINTS: usize = 50;
const THRESHOLD_SCENARIOS: u64 = 50;
const THRESHOLD_SAMPLES: usize = 10;
/// Fallback plan against the filtered oracle: the plan may beat the grid by
/// refinement but must not be worse than it.
const FALLBACK_GRID_REL_TOL: f64 = 1e-3;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn suite_verdict(r: &SuiteReport) -> Verdict {
    let mut detail = format!("{}/{} passed", r.passed, r.total());
    if r.skipped > 0 {
        detail += &format!(", {} outside premise", r.skipped);
    }
    for (k, n) in &r.notes {
        detail += &format!(", {k}: {n}");
    }
    if let Some(f) = &r.first_failure {
        detail += &format!("; first failure at seed {}: {}", f.seed, f.detail);
    }
    Verdict {
        pass: r.ok(),
        detail,
    }
}

fn note(r: &SuiteReport, key: &str) -> usize {
    r.notes
        .iter()
        .find(|(k, _)| k == key)
        .map_or(0, |(_, n)| *n)
}

fn energy_equivalence() -> Verdict {
    let start = Instant::now();
    let r = energy_suite(0..BOUNDARY_INSTANCES).unwrap();
    let elapsed = start.elapsed();
    let mut v = suite_verdict(&r);
    v.pass &= r.total() == BOUNDARY_INSTANCES as usize && elapsed < ENERGY_TIME_LIMIT;
    v.detail += &format!(" in {:.3} s", elapsed.as_secs_f64());
    v
}

fn boundary_residuals() -> Verdict {
    let r = boundary_residual_suite(0..BOUNDARY_INSTANCES).unwrap();
    let mut v = suite_verdict(&r);
    v.pass &= r.total() == BOUNDARY_INSTANCES as usize;
    v
}

fn window_soundness() -> Verdict {
    let r = window_soundness_suite(
        0..WINDOW_SEEDS,
        WINDOW_POINTS_PER_SEED,
        &ScenarioRanges::default(),
    )
    .unwrap();
    let mut v = suite_verdict(&r);
    v.pass &= r.passed == WINDOW_SEEDS as usize * WINDOW_POINTS_PER_SEED;
    v
}

fn oracle_agreement() -> Verdict {
    let cfg = VerifyConfig {
        oracle_grid: ORACLE_GRID,
        ..VerifyConfig::default()
    };
    let start = Instant::now();
    let (mut same, mut ties, mut worst_gap) = (0, 0, 0.0f64);
    let mut failures = Vec::new();
    for seed in 0..ORACLE_SCENARIOS {
        let s = random_scenario(seed, &cfg.ranges).unwrap();
        let c = compare_with_oracle(&s, &cfg).unwrap();
        if c.policy_k == c.oracle_k {
            same += 1;
        } else if c.agrees() {
            ties += 1;
            worst_gap = worst_gap.max(c.relative_gap());
        }
        if !c.agrees() {
            failures.push(format!("seed {seed}: {c}"));
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: failures.is_empty() && elapsed < ORACLE_TIME_LIMIT,
        detail: format!(
            "{same} same index, {ties} within {TIE_REL_TOL:e} (largest gap {worst_gap:.2e}), {} disagree, in {:.1} s{}",
            failures.len(),
            elapsed.as_secs_f64(),
            failures.first().map_or(String::new(), |f| format!("; first: {f}"))
        ),
    }
}

fn time_regime() -> Verdict {
    let r = time_regime_suite(
        0..RULE_SEED_BUDGET,
        RULE_SCENARIOS,
        &VerifyConfig::default(),
    )
    .unwrap();
    let mut v = suite_verdict(&r);
    v.pass &= r.total() == RULE_SCENARIOS && note(&r, "merge-first case") >= MERGE_FIRST_MIN;
    v
}

fn energy_regime() -> Verdict {
    let r = energy_regime_suite(
        0..RULE_SEED_BUDGET,
        RULE_SCENARIOS,
        &VerifyConfig::default(),
    )
    .unwrap();
    let mut v = suite_verdict(&r);
    v.pass &= r.total() == RULE_SCENARIOS;
    v
}

fn energy_slope() -> Verdict {
    let r = energy_decrease_suite(0..SLOPE_TRIPLES, SLOPE_POINTS).unwrap();
    let mut v = suite_verdict(&r);
    v.pass &= r.total() == SLOPE_TRIPLES as usize;
    v
}

fn alpha_thresholds() -> Verdict {
    let r = alpha_threshold_suite(
        0..THRESHOLD_SCENARIOS,
        THRESHOLD_SAMPLES,
        &VerifyConfig::default(),
    )
    .unwrap();
    let mut v = suite_verdict(&r);
    v.pass &= r.total() == THRESHOLD_SCENARIOS as usize;
    v
}

/// Weak accelerator and a close platoon: merging second is cheapest but
/// needs more than `u_max`.
fn weak_actuator_scenario() -> Scenario {
    Scenario {
        t0: 0.0,
        av: VehicleState::new(200.0, 20.0),
        hdvs: vec![Hdv::cruising(230.0, 25.0), Hdv::cruising(150.0, 25.0)],
        l_cz: 400.0,
        alpha: 1.0,
        limits: ConstraintLimits {
            v_min: 0.0,
            v_max: 33.0,
            u_min: -7.0,
            u_max: 0.5,
            phi_c: 1.0,
            phi_h: 1.0,
            delta: 5.0,
        },
        model: BehaviorModel {
            u_bar: 5.0,
            beta: 0.1,
        },
    }
    .validate()
    .unwrap()
}

fn fallback() -> Verdict {
    let s = weak_actuator_scenario();
    let plan = optimal_index(&s).unwrap();
    let rejected = plan.unfiltered_argmin().unwrap();
    let oracle = brute_force_with(
        &s,
        &OracleOptions {
            actuator_filter: true,
            ..OracleOptions::grid(ORACLE_GRID.0, ORACLE_GRID.1)
        },
    )
    .unwrap();
    let best_remaining = oracle
        .per_k
        .iter()
        .filter(|e| e.k != rejected)
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .unwrap();
    let gap = (plan.total - best_remaining.cost) / best_remaining.cost;
    let pass = plan.fallback_applied
        && plan.k != rejected
        && plan.feasible.is_feasible()
        && plan.k == best_remaining.k
        && gap <= 0.0
        && gap > -FALLBACK_GRID_REL_TOL;
    Verdict {
        pass,
        detail: format!(
            "rejected k = {rejected}, chosen k = {} (J = {:.6}), filtered oracle k = {} (J = {:.6}), fallback_applied = {}, feasible = {}",
            plan.k,
            plan.total,
            best_remaining.k,
            best_remaining.cost,
            plan.fallback_applied,
            plan.feasible.is_feasible()
        ),
    }
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avmerge"))
        .args(args)
        .output()
        .unwrap()
}

fn golden_runs() -> Verdict {
    let mut files: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    let mut problems = Vec::new();
    for file in &files {
        let name = file.file_name().unwrap().to_string_lossy().into_owned();
        let path = file.to_str().unwrap();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let solves: Vec<Output> = dirs
            .iter()
            .map(|d| run(&["solve", path, "--out", d.path().to_str().unwrap()]))
            .collect();
        let sweeps: Vec<Output> = (0..2).map(|_| run(&["sweep-alpha", path])).collect();
        for (what, o) in [("solve", &solves), ("sweep-alpha", &sweeps)] {
            if !o[0].status.success() {
                problems.push(format!("{name}: {what} exited with {}", o[0].status));
            }
            if o[0].stdout != o[1].stdout {
                problems.push(format!("{name}: {what} output differs between runs"));
            }
        }
        for artifact in ["plan.json", "trajectory.csv"] {
            let read = |i: usize| std::fs::read(dirs[i].path().join(artifact)).unwrap_or_default();
            if read(0).is_empty() || read(0) != read(1) {
                problems.push(format!(
                    "{name}: {artifact} missing or differs between runs"
                ));
            }
        }
    }
    Verdict {
        pass: files.len() >= 3 && problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "{} scenarios, solve and sweep-alpha byte-identical across runs",
                files.len()
            )
        } else {
            problems.join("; ")
        },
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("energy closed form equals quadrature", energy_equivalence),
        ("trajectory boundary residuals", boundary_residuals),
        ("safe window soundness", window_soundness),
        ("policy agrees with 512x512 oracle", oracle_agreement),
        ("time-dominant index rule matches oracle", time_regime),
        (
            "energy-dominant shortlist holds the global minimum",
            energy_regime,
        ),
        (
            "energy decreases with horizon below threshold",
            energy_slope,
        ),
        (
            "optimal index constant beyond alpha thresholds",
            alpha_thresholds,
        ),
        ("actuator fallback picks cheapest feasible index", fallback),
        ("CLI golden runs are byte-identical", golden_runs),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
