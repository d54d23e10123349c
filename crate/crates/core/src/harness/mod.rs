//! Verification tools: a dense-grid reference solver, a seeded scenario
//! generator, a replay audit of finished plans and seeded property suites.

mod generator;
mod oracle;
mod replay;
mod suites;

pub use generator::{random_scenario, ScenarioRanges, MAX_ATTEMPTS};
pub use oracle::{brute_force, brute_force_with, OracleEntry, OracleOptions, OracleResult};
pub use replay::{replay, ConstraintId, ReplayAudit, ReplaySample, Violation, REPLAY_TOL};
pub use suites::{
    alpha_threshold_suite, boundary_residual_suite, check_alpha_thresholds, check_energy_regime,
    check_plan_energy, check_time_regime, compare_with_oracle, energy_decrease_suite,
    energy_regime_suite, energy_suite, oracle_agreement_suite, random_boundary_value,
    time_regime_suite, window_soundness_suite, Check, OracleComparison, SuiteFailure, SuiteReport,
    VerifyConfig, ENERGY_REL_TOL, TIE_REL_TOL,
};
