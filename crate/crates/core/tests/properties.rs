//! Cross-module properties exercised through the public API only.

use avmerge_core::harness::{brute_force, random_scenario, replay, ScenarioRanges};
use avmerge_core::policy::FastPathMode;
use avmerge_core::{optimal_index, optimal_index_with, SolverOptions};

#[test]
fn feasible_plans_replay_clean() {
    let ranges = ScenarioRanges::default();
    for seed in 0..40 {
        let s = random_scenario(seed, &ranges).unwrap();
        let plan = optimal_index(&s).unwrap();
        assert!(plan.feasible.is_feasible(), "seed {seed}");
        let audit = replay(&plan, &s, 0.1).unwrap();
        assert!(audit.is_clean(), "seed {seed}: {:?}", audit.violations);
        assert_eq!(audit.samples.last().unwrap().t, plan.t_m);
    }
}

#[test]
fn refined_optimum_never_worse_than_grid() {
    let ranges = ScenarioRanges::default();
    for seed in 0..30 {
        let s = random_scenario(seed, &ranges).unwrap();
        let plan = optimal_index(&s).unwrap();
        let oracle = brute_force(&s, 128, 128).unwrap();
        for e in &oracle.per_k {
            let sol = plan.candidates[e.k.get() - 1]
                .solution
                .unwrap_or_else(|| panic!("seed {seed}: k = {} unsolved", e.k));
            assert!(
                sol.total <= e.cost + 1e-9 * e.cost.abs().max(1.0),
                "seed {seed}, k = {}: {} > {}",
                e.k,
                sol.total,
                e.cost
            );
        }
    }
}

#[test]
fn closed_form_rules_agree_with_full_scan() {
    for alpha in [0.0, 1.0] {
        let ranges = ScenarioRanges::default().with_alpha(alpha);
        for seed in 0..40 {
            let s = random_scenario(seed, &ranges).unwrap();
            let full = optimal_index(&s).unwrap();
            let only = optimal_index_with(
                &s,
                &SolverOptions {
                    fast_path: FastPathMode::Only,
                    ..SolverOptions::default()
                },
            )
            .unwrap();
            assert_eq!(only.k, full.k, "alpha {alpha}, seed {seed}");
            let advisory = optimal_index_with(
                &s,
                &SolverOptions {
                    fast_path: FastPathMode::Advisory,
                    ..SolverOptions::default()
                },
            )
            .unwrap();
            assert_eq!(advisory.k, full.k);
            assert_ne!(
                advisory.fast_path.unwrap().agrees_with_scan,
                Some(false),
                "alpha {alpha}, seed {seed}"
            );
        }
    }
}
