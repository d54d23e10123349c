//! Randomized property suites over seed ranges.
//!
//! Every suite reports pass and fail counts plus the first failing seed, so a
//! failure can be replayed with a single seed.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{brute_force_with, random_scenario, OracleOptions, ScenarioRanges};
use crate::error::Result;
use crate::policy::{
    alpha_lower_threshold, alpha_upper_threshold, optimal_index_with, optimize_index_with,
    theorem1_index, theorem2_shortlist, time_rule_inputs, MergePlan, SolverOptions,
    Theorem1Outcome, Theorem2Outcome,
};
use crate::safe_sets::{check_safe_gap, safe_window};
use crate::trajectory::{
    decreasing_threshold, energy_closed_form, energy_quadrature, solve_coefficients,
};
use crate::types::{Scenario, SequenceIndex};

/// Relative cost gap under which two different indices count as tied.
pub const TIE_REL_TOL: f64 = 1e-4;
/// Bound on closed-form vs quadrature energy and on boundary residuals.
pub const ENERGY_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFailure {
    pub seed: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    /// Seeds outside the suite's premise (rule did not apply, window empty).
    pub skipped: usize,
    pub first_failure: Option<SuiteFailure>,
    /// Suite-specific tallies, e.g. how often a case was exercised.
    pub notes: Vec<(String, usize)>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: 0,
            failed: 0,
            skipped: 0,
            first_failure: None,
            notes: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed
    }

    fn record(&mut self, seed: u64, pass: bool, detail: impl FnOnce() -> String) {
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(SuiteFailure {
                    seed,
                    detail: detail(),
                });
            }
        }
    }

    fn record_check(&mut self, seed: u64, check: Check) {
        match check {
            Check::Pass => self.record(seed, true, String::new),
            Check::Fail(detail) => self.record(seed, false, || detail),
            Check::Skip(_) => self.skipped += 1,
        }
    }

    fn note(&mut self, key: &str, count: usize) {
        self.notes.push((key.to_string(), count));
    }
}

/// Verdict of one property on one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail(String),
    /// The scenario is outside the property's premise.
    Skip(String),
}

impl Check {
    fn from_bool(pass: bool, detail: impl FnOnce() -> String) -> Self {
        if pass {
            Check::Pass
        } else {
            Check::Fail(detail())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub ranges: ScenarioRanges,
    pub solver: SolverOptions,
    pub oracle_grid: (usize, usize),
    /// Fault injection into the oracle; see [`OracleOptions`].
    #[doc(hidden)]
    pub flip_discount_sign: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            ranges: ScenarioRanges::default(),
            solver: SolverOptions::default(),
            oracle_grid: (512, 512),
            flip_discount_sign: false,
        }
    }
}

impl VerifyConfig {
    fn oracle(&self) -> OracleOptions {
        OracleOptions {
            flip_discount_sign: self.flip_discount_sign,
            ..OracleOptions::grid(self.oracle_grid.0, self.oracle_grid.1)
        }
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Random boundary-value instance: `(x0, v0, t0, l, v_m, t_m)`.
pub fn random_boundary_value(seed: u64) -> (f64, f64, f64, f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = rng.gen_range(-100.0..100.0);
    let v0 = rng.gen_range(0.0..35.0);
    let t0 = rng.gen_range(0.0..100.0);
    let l = x0 + rng.gen_range(50.0..600.0);
    let v_m = rng.gen_range(0.0..35.0);
    let t_m = t0 + rng.gen_range(1.0..60.0);
    (x0, v0, t0, l, v_m, t_m)
}

/// Closed-form energy against Gauss-Legendre quadrature of the same trajectory.
pub fn energy_suite(seeds: Range<u64>) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("energy closed form vs quadrature");
    for seed in seeds {
        let (x0, v0, t0, l, v_m, t_m) = random_boundary_value(seed);
        let c = solve_coefficients(x0, v0, t0, l, v_m, t_m)?;
        let closed = energy_closed_form(x0, v0, t0, l, v_m, t_m)?;
        let quad = energy_quadrature(&c);
        let err = (closed - quad).abs() / quad.max(1.0);
        r.record(seed, err < ENERGY_REL_TOL, || {
            format!("closed {closed} quadrature {quad}")
        });
    }
    Ok(r)
}

/// Position and speed at both ends of the solved trajectory.
pub fn boundary_residual_suite(seeds: Range<u64>) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("trajectory boundary residuals");
    for seed in seeds {
        let (x0, v0, t0, l, v_m, t_m) = random_boundary_value(seed);
        let c = solve_coefficients(x0, v0, t0, l, v_m, t_m)?;
        let (start, end) = (c.eval(t0)?, c.eval(t_m)?);
        let worst = [(start.x, x0), (start.v, v0), (end.x, l), (end.v, v_m)]
            .iter()
            .map(|&(got, want)| (got - want).abs() / want.abs().max(1.0))
            .fold(0.0, f64::max);
        r.record(seed, worst < ENERGY_REL_TOL, || {
            format!("worst relative residual {worst:e}")
        });
    }
    Ok(r)
}

/// Points sampled inside computed safe windows satisfy the gap constraints.
pub fn window_soundness_suite(
    seeds: Range<u64>,
    points_per_seed: usize,
    ranges: &ScenarioRanges,
) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("safe window soundness");
    for seed in seeds {
        let s = random_scenario(seed, ranges)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        // Each usable window with the largest speed whose time interval is
        // nonempty after `t0`.
        let windows: Vec<_> = s
            .indices()
            .filter_map(|k| safe_window(k, s.t0, &s).ok())
            .filter_map(|w| {
                let slope = w.t_lower.slope;
                let v_cap = if slope > 0.0 {
                    w.v_upper.min((w.t_upper - w.t_lower.intercept) / slope)
                } else {
                    w.v_upper
                };
                (v_cap >= 0.0 && w.t_upper >= s.t0 && w.t_lower.at(0.0) <= w.t_upper)
                    .then_some((w, v_cap))
            })
            .collect();
        if windows.is_empty() {
            r.skipped += points_per_seed;
            continue;
        }
        for _ in 0..points_per_seed {
            let (w, v_cap) = windows[rng.gen_range(0..windows.len())];
            let v = rng.gen_range(0.0..=v_cap);
            let lo = w.t_lower.at(v).max(s.t0).min(w.t_upper);
            let hi = w.t_upper.min(lo + 100.0);
            let t = rng.gen_range(lo..=hi);
            let gap = check_safe_gap(w.k, t, v, &s);
            r.record(seed, gap.is_safe() && gap.components_hold(), || {
                format!("k = {}, t = {t}, v = {v}: {gap:?}", w.k)
            });
        }
    }
    Ok(r)
}

/// Finite-difference slope of energy against horizon is negative below the threshold.
pub fn energy_decrease_suite(seeds: Range<u64>, points: usize) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("energy decreasing below threshold");
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = rng.gen_range(0.0..200.0);
        let l = x0 + rng.gen_range(100.0..500.0);
        let v0 = rng.gen_range(0.5..35.0);
        let v_m = rng.gen_range(0.5..35.0);
        let tau = decreasing_threshold(l - x0, v0, v_m);
        let top = tau * (1.0 - 1e-6);
        let mut violations = Vec::new();
        for i in 1..=points {
            let horizon = top * i as f64 / (points + 1) as f64;
            let h = 1e-6 * horizon;
            let e = |t: f64| energy_closed_form(x0, v0, 0.0, l, v_m, t);
            let slope = (e(horizon + h)? - e(horizon - h)?) / (2.0 * h);
            if !(slope < 0.0) {
                violations.push((horizon, slope));
            }
        }
        r.record(seed, violations.is_empty(), || {
            format!("nonnegative slopes at {violations:?}")
        });
    }
    Ok(r)
}

/// Policy index against the dense oracle: same index, or costs within
/// [`TIE_REL_TOL`]. The oracle must also never undercut the policy's cost by
/// more than that tolerance, since the policy refines past the grid.
pub fn oracle_agreement_suite(seeds: Range<u64>, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("oracle agreement");
    let mut ties = 0;
    for seed in seeds {
        let s = random_scenario(seed, &cfg.ranges)?;
        let c = compare_with_oracle(&s, cfg)?;
        if c.agrees() && c.policy_k != c.oracle_k {
            ties += 1;
        }
        r.record_check(seed, Check::from_bool(c.agrees(), || c.to_string()));
    }
    r.note("agreement through cost ties", ties);
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    /// Cheapest index before actuator filtering.
    pub policy_k: Option<SequenceIndex>,
    pub oracle_k: Option<SequenceIndex>,
    pub policy_cost: f64,
    pub oracle_cost: f64,
}

impl OracleComparison {
    pub fn relative_gap(&self) -> f64 {
        relative_gap(self.policy_cost, self.oracle_cost)
    }

    pub fn agrees(&self) -> bool {
        let gap = self.relative_gap();
        let not_undercut = self.oracle_cost >= self.policy_cost || gap < TIE_REL_TOL;
        (self.policy_k == self.oracle_k || gap < TIE_REL_TOL) && not_undercut
    }
}

impl std::fmt::Display for OracleComparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "policy k = {:?} (J = {}), oracle k = {:?} (J = {})",
            self.policy_k.map(|k| k.get()),
            self.policy_cost,
            self.oracle_k.map(|k| k.get()),
            self.oracle_cost
        )
    }
}

pub fn compare_with_oracle(s: &Scenario, cfg: &VerifyConfig) -> Result<OracleComparison> {
    let plan = optimal_index_with(s, &cfg.solver)?;
    let oracle = brute_force_with(s, &cfg.oracle())?;
    let policy_k = plan.unfiltered_argmin();
    Ok(OracleComparison {
        policy_k,
        oracle_k: oracle.argmin_k,
        policy_cost: policy_k
            .and_then(|k| plan.candidates[k.get() - 1].solution)
            .map_or(f64::INFINITY, |x| x.total),
        oracle_cost: oracle.min_cost().unwrap_or(f64::INFINITY),
    })
}

/// Time-dominant rule: whenever it names an index, the oracle agrees.
/// Meant for `alpha = 1`.
pub fn check_time_regime(s: &Scenario, cfg: &VerifyConfig) -> Result<Check> {
    let q = match time_rule_inputs(s).and_then(|(v_m, d_t)| theorem1_index(s, v_m, d_t)) {
        Ok(Theorem1Outcome::Index(q)) => q,
        Ok(Theorem1Outcome::NoConsistentQ) => {
            return Ok(Check::Skip("no index satisfies the spacing bounds".into()))
        }
        Err(e) => return Ok(Check::Skip(e.to_string())),
    };
    let oracle = brute_force_with(s, &cfg.oracle())?;
    Ok(Check::from_bool(oracle.argmin_k == Some(q), || {
        format!(
            "rule k = {q}, oracle k = {:?}",
            oracle.argmin_k.map(|k| k.get())
        )
    }))
}

/// Runs [`check_time_regime`] at `alpha = 1` until `want` scenarios have been answered.
pub fn time_regime_suite(
    seeds: Range<u64>,
    want: usize,
    cfg: &VerifyConfig,
) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("time-dominant index rule");
    let ranges = cfg.ranges.with_alpha(1.0);
    let mut merge_first_case = 0;
    for seed in seeds {
        if r.passed + r.failed >= want {
            break;
        }
        let s = random_scenario(seed, &ranges)?;
        let check = check_time_regime(&s, cfg)?;
        if !matches!(check, Check::Skip(_)) {
            let (v_m, _) = time_rule_inputs(&s)?;
            if s.platoon().is_some_and(|p| v_m >= p.speed) {
                merge_first_case += 1;
            }
        }
        r.record_check(seed, check);
    }
    r.note("merge-first case", merge_first_case);
    Ok(r)
}

/// Energy-dominant shortlist: when it applies, the cheaper of the first and
/// last index is the oracle's global minimum. Meant for `alpha = 0`.
pub fn check_energy_regime(s: &Scenario, cfg: &VerifyConfig) -> Result<Check> {
    let last = match optimize_index_with(s.last_index(), s, &cfg.solver) {
        Ok(last) => last,
        Err(e) => return Ok(Check::Skip(e.to_string())),
    };
    match theorem2_shortlist(s, &last, last.v_m) {
        Ok(Theorem2Outcome::Shortlist(_)) => {}
        Ok(Theorem2Outcome::NotApplicable) => {
            return Ok(Check::Skip(
                "travel time above the decreasing-energy range".into(),
            ))
        }
        Err(e) => return Ok(Check::Skip(e.to_string())),
    }
    let oracle = brute_force_with(s, &cfg.oracle())?;
    let shortlist_min = [s.index(1)?, s.last_index()]
        .iter()
        .filter_map(|&k| oracle.entry(k))
        .map(|e| e.cost)
        .fold(f64::INFINITY, f64::min);
    let global = oracle.min_cost().unwrap_or(f64::INFINITY);
    Ok(Check::from_bool(shortlist_min == global, || {
        format!(
            "shortlist min {shortlist_min}, global min {global} at k = {:?}",
            oracle.argmin_k.map(|k| k.get())
        )
    }))
}

/// Runs [`check_energy_regime`] at `alpha = 0` until `want` scenarios qualify.
pub fn energy_regime_suite(
    seeds: Range<u64>,
    want: usize,
    cfg: &VerifyConfig,
) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("energy-dominant shortlist rule");
    let ranges = cfg.ranges.with_alpha(0.0);
    for seed in seeds {
        if r.passed + r.failed >= want {
            break;
        }
        let s = random_scenario(seed, &ranges)?;
        r.record_check(seed, check_energy_regime(&s, cfg)?);
    }
    Ok(r)
}

/// `samples` weights in `(alpha_l, 1]` share one cost-minimizing index, and
/// so do `samples` weights in `[0, alpha_u]`. The thresholds involve costs
/// only, so the index is taken before actuator filtering; no tie tolerance.
pub fn check_alpha_thresholds(s: &Scenario, samples: usize, cfg: &VerifyConfig) -> Result<Check> {
    let (lower, upper) = match (alpha_lower_threshold(s), alpha_upper_threshold(s)) {
        (Ok(l), Ok(u)) => (l, u),
        (Err(e), _) | (_, Err(e)) => return Ok(Check::Skip(e.to_string())),
    };
    let index_at = |alpha: f64| -> Result<usize> {
        let plan = optimal_index_with(&s.with_alpha(alpha), &cfg.solver)?;
        Ok(plan.unfiltered_argmin().unwrap_or(plan.k).get())
    };
    let mut high = Vec::with_capacity(samples);
    let mut low = Vec::with_capacity(samples);
    for i in 0..samples {
        high.push(index_at(
            lower + (1.0 - lower) * (i + 1) as f64 / samples as f64,
        )?);
        let frac = if samples > 1 {
            i as f64 / (samples - 1) as f64
        } else {
            0.0
        };
        low.push(index_at(upper * frac)?);
    }
    let constant = |ks: &[usize]| ks.iter().all(|&k| k == ks[0]);
    Ok(Check::from_bool(constant(&high) && constant(&low), || {
        format!("alpha_l = {lower}: {high:?}; alpha_u = {upper}: {low:?}")
    }))
}

pub fn alpha_threshold_suite(
    seeds: Range<u64>,
    samples: usize,
    cfg: &VerifyConfig,
) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("alpha threshold consistency");
    for seed in seeds {
        let s = random_scenario(seed, &cfg.ranges)?;
        r.record_check(seed, check_alpha_thresholds(&s, samples, cfg)?);
    }
    Ok(r)
}

/// Closed-form energy of a plan's trajectory against quadrature.
pub fn check_plan_energy(plan: &MergePlan, s: &Scenario) -> Result<Check> {
    let closed = energy_closed_form(
        s.av.position,
        s.av.velocity,
        s.t0,
        s.l_cz,
        plan.v_m,
        plan.t_m,
    )?;
    let quad = energy_quadrature(&plan.coeffs);
    Ok(Check::from_bool(
        (closed - quad).abs() / quad.max(1.0) < ENERGY_REL_TOL,
        || format!("closed {closed} quadrature {quad}"),
    ))
}
