//! Closed-form index rules for a uniform platoon.
//!
//! When time dominates the objective (`alpha` above [`alpha_lower`]) the
//! optimal index follows from the platoon spacing alone. When energy dominates
//! (`alpha` at most [`alpha_upper`]) and waiting behind the platoon is fast
//! enough that AV energy still falls with longer horizons, only the first and
//! the last index can be optimal.

use serde::{Deserialize, Serialize};

use super::{
    all_not_evaluated, candidate, optimize_index_with, Candidate, IndexSolution, SolverOptions,
};
use crate::disruption::{base_energy_disruption, base_time_disruption};
use crate::error::{Error, Result};
use crate::safe_sets::{merging_speed_bound, MergeRegion};
use crate::trajectory::decreasing_threshold;
use crate::types::{Platoon, Scenario, SequenceIndex};

/// Below this distance from one the geometric sum is taken term by term.
const GEOMETRIC_TOL: f64 = 1e-12;

/// `1 + gamma + ... + gamma^(n-1)`.
pub fn geometric_sum(gamma: f64, n: usize) -> f64 {
    if (1.0 - gamma).abs() < GEOMETRIC_TOL {
        (0..n).map(|j| gamma.powi(j as i32)).sum()
    } else {
        (1.0 - gamma.powi(n as i32)) / (1.0 - gamma)
    }
}

/// Crude bound on the energy the AV and the platoon can spend:
/// `((v_max - v0) u_max + n (v_d - v_min) u_bar) / 2`.
pub fn energy_upper_estimate(
    v_max: f64,
    v0: f64,
    u_max: f64,
    n: usize,
    v_d: f64,
    v_min: f64,
    u_bar: f64,
) -> f64 {
    0.5 * ((v_max - v0) * u_max + n as f64 * (v_d - v_min) * u_bar)
}

/// Weight above which the time-optimal index stays optimal.
pub fn alpha_lower(e_max: f64, z: f64, v_d: f64, gamma: f64, n: usize, d_t: f64) -> f64 {
    let exponent = n.saturating_sub(1) as i32;
    e_max / (e_max + z / v_d + gamma.powi(exponent) * d_t)
}

/// Weight at or below which the energy-optimal index stays optimal.
pub fn alpha_upper(d_e: f64, z: f64, v_d: f64, gamma: f64, n: usize, d_t: f64) -> f64 {
    let e_min = gamma.powi(n.saturating_sub(1) as i32) * d_e;
    if e_min == 0.0 {
        return 0.0;
    }
    e_min / (e_min + n as f64 * z / v_d + geometric_sum(gamma, n) * d_t)
}

fn platoon(s: &Scenario) -> Result<Platoon> {
    s.platoon().ok_or(Error::AssumptionViolated(
        "HDVs must share one desired speed and one spacing",
    ))
}

/// Merging speed of the last index when the objective is pure time (`alpha = 1`)
/// or pure energy (`alpha = 0`).
fn last_index_speed(s: &Scenario, alpha: f64) -> Result<f64> {
    let sol = optimize_index_with(
        s.last_index(),
        &s.with_alpha(alpha),
        &SolverOptions::default(),
    )?;
    Ok(sol.v_m)
}

pub fn alpha_lower_threshold(scenario: &Scenario) -> Result<f64> {
    let s = scenario;
    let p = platoon(s)?;
    let n = s.hdv_count();
    let lim = &s.limits;
    let v_m = last_index_speed(s, 1.0)?;
    let e_max = energy_upper_estimate(
        lim.v_max,
        s.av.velocity,
        lim.u_max,
        n,
        p.speed,
        lim.v_min,
        s.model.u_bar,
    );
    let gamma = (-s.model.beta * p.spacing).exp();
    let d_t = base_time_disruption(p.speed, v_m, s.model.u_bar)?;
    Ok(alpha_lower(e_max, p.spacing, p.speed, gamma, n, d_t))
}

pub fn alpha_upper_threshold(scenario: &Scenario) -> Result<f64> {
    let s = scenario;
    let p = platoon(s)?;
    let n = s.hdv_count();
    let v_m = last_index_speed(s, 0.0)?;
    let gamma = (-s.model.beta * p.spacing).exp();
    let d_t = base_time_disruption(p.speed, v_m, s.model.u_bar)?;
    let d_e = base_energy_disruption(p.speed, v_m, s.model.u_bar)?;
    Ok(alpha_upper(d_e, p.spacing, p.speed, gamma, n, d_t))
}

/// Merging speed shared by every index between two HDVs: the largest the
/// platoon spacing admits, capped at `v_max`.
pub fn common_merging_speed(scenario: &Scenario) -> Result<f64> {
    platoon(scenario)?;
    merging_speed_bound(scenario.index(2)?, scenario.t0, scenario)
}

fn admissible(k: SequenceIndex, s: &Scenario) -> bool {
    const PROBES: usize = 257;
    let Ok(region) = MergeRegion::new(k, s) else {
        return false;
    };
    let (lo, hi) = region.v_range;
    (0..PROBES).any(|i| {
        region
            .time_interval(lo + (hi - lo) * i as f64 / (PROBES - 1) as f64)
            .is_some()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem1Outcome {
    Index(SequenceIndex),
    /// The spacing bounds hold for no index.
    NoConsistentQ,
}

/// Time-dominant index rule.
///
/// Merging at or above the platoon speed disrupts nobody, so the AV goes
/// first. Otherwise index `q` is optimal when the spacing `z` is at least the
/// average disruption saved by merging behind the `N - q + 1` HDVs after `q`,
/// and at most the average disruption added by merging ahead of the `q - 1`
/// HDVs before it (both scaled by `v_d D_t`). The first bound is vacuous for
/// the last index and the second for the first.
pub fn theorem1_index(scenario: &Scenario, v_m_star: f64, d_t: f64) -> Result<Theorem1Outcome> {
    let s = scenario;
    let p = platoon(s)?;
    let n = s.hdv_count();
    if v_m_star >= p.speed {
        let first = s.index(1)?;
        if !admissible(first, s) {
            return Err(Error::InadmissibleIndex { k: 1 });
        }
        return Ok(Theorem1Outcome::Index(first));
    }
    if let Some(k) = s.indices().find(|&k| !admissible(k, s)) {
        return Err(Error::InadmissibleIndex { k: k.get() });
    }
    let gamma = (-s.model.beta * p.spacing).exp();
    let scale = p.speed * d_t;
    let z = p.spacing;
    for q in 1..=n + 1 {
        let behind = n + 1 - q;
        let lower_ok = behind == 0 || geometric_sum(gamma, behind) / behind as f64 * scale <= z;
        let ahead = q - 1;
        let upper_ok = ahead == 0
            || gamma.powi(behind as i32) * geometric_sum(gamma, ahead) / ahead as f64 * scale >= z;
        if lower_ok && upper_ok {
            return Ok(Theorem1Outcome::Index(s.index(q)?));
        }
    }
    Ok(Theorem1Outcome::NoConsistentQ)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem2Outcome {
    /// Only the first and the last index can be optimal.
    Shortlist([SequenceIndex; 2]),
    NotApplicable,
}

/// Energy-dominant shortlist rule: applies when the optimal travel time of the
/// last index is within the range where AV energy still decreases with horizon.
pub fn theorem2_shortlist(
    scenario: &Scenario,
    last: &IndexSolution,
    v_m_star: f64,
) -> Result<Theorem2Outcome> {
    let s = scenario;
    platoon(s)?;
    if last.k != s.last_index() {
        return Err(Error::ParameterOutOfRange {
            name: "last.k",
            value: last.k.get() as f64,
        });
    }
    let tau = decreasing_threshold(s.av_distance(), s.av.velocity, v_m_star);
    let travel = last.t_m - s.t0;
    if travel <= tau * (1.0 + 1e-12) {
        Ok(Theorem2Outcome::Shortlist([s.index(1)?, s.last_index()]))
    } else {
        Ok(Theorem2Outcome::NotApplicable)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FastPathRule {
    #[default]
    None,
    /// Time-dominant spacing rule.
    TimeRegime,
    /// Energy-dominant first-or-last shortlist.
    EnergyRegime,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FastPathSummary {
    pub alpha_lower: Option<f64>,
    pub alpha_upper: Option<f64>,
    pub rule: FastPathRule,
    /// Indices the rule leaves to compare; empty when no rule applied.
    pub shortlist: Vec<SequenceIndex>,
    pub predicted: Option<SequenceIndex>,
    /// Whether the prediction matched a full scan; set in advisory mode.
    pub agrees_with_scan: Option<bool>,
    pub note: Option<String>,
}

/// The speed the AV would merge with as first vehicle decides whether going
/// first disrupts anyone; the disruption at the speed shared by the
/// in-platoon slots sets the spacing bounds.
fn time_rule(s: &Scenario) -> Result<Theorem1Outcome> {
    let (v_m, d_t) = time_rule_inputs(s)?;
    theorem1_index(s, v_m, d_t)
}

/// Arguments for [`theorem1_index`]: merging speed as first vehicle (the
/// common speed when that slot is empty) and the base time disruption at
/// the common speed.
pub fn time_rule_inputs(scenario: &Scenario) -> Result<(f64, f64)> {
    let s = scenario;
    let p = platoon(s)?;
    let common = common_merging_speed(s)?;
    let first = match optimize_index_with(s.index(1)?, s, &SolverOptions::default()) {
        Ok(sol) => sol.v_m,
        Err(Error::EmptyWindow { .. }) => common,
        Err(e) => return Err(e),
    };
    Ok((first, base_time_disruption(p.speed, common, s.model.u_bar)?))
}

fn cheaper(a: &Candidate, b: &Candidate) -> Option<SequenceIndex> {
    match (a.solution, b.solution) {
        (Some(x), Some(y)) => Some(if y.total < x.total { b.k } else { a.k }),
        (Some(_), None) => Some(a.k),
        (None, Some(_)) => Some(b.k),
        (None, None) => None,
    }
}

fn thresholds(s: &Scenario, summary: &mut FastPathSummary) {
    match (alpha_lower_threshold(s), alpha_upper_threshold(s)) {
        (Ok(l), Ok(u)) => {
            summary.alpha_lower = Some(l);
            summary.alpha_upper = Some(u);
        }
        (Err(e), _) | (_, Err(e)) => summary.note = Some(e.to_string()),
    }
}

/// Evaluates the rules next to a completed full scan.
pub(crate) fn summarize(s: &Scenario, candidates: &[Candidate]) -> FastPathSummary {
    let mut summary = FastPathSummary::default();
    thresholds(s, &mut summary);
    let (Some(l), Some(u)) = (summary.alpha_lower, summary.alpha_upper) else {
        return summary;
    };
    if s.alpha > l {
        match time_rule(s) {
            Ok(Theorem1Outcome::Index(q)) => {
                summary.rule = FastPathRule::TimeRegime;
                summary.shortlist = vec![q];
                summary.predicted = Some(q);
            }
            Ok(Theorem1Outcome::NoConsistentQ) => {
                summary.note = Some("no index satisfies the spacing bounds".into())
            }
            Err(e) => summary.note = Some(e.to_string()),
        }
    } else if s.alpha <= u {
        let last = &candidates[candidates.len() - 1];
        if let Some(sol) = last.solution {
            match theorem2_shortlist(s, &sol, sol.v_m) {
                Ok(Theorem2Outcome::Shortlist(pair)) => {
                    summary.rule = FastPathRule::EnergyRegime;
                    summary.shortlist = pair.to_vec();
                    summary.predicted = cheaper(&candidates[0], last);
                }
                Ok(Theorem2Outcome::NotApplicable) => {
                    summary.note =
                        Some("waiting behind the platoon is too slow for the shortlist".into())
                }
                Err(e) => summary.note = Some(e.to_string()),
            }
        }
    }
    summary
}

/// Optimizes only the indices a rule leaves open; falls back to every index
/// when no rule applies or none of the shortlisted plans is drivable.
pub(crate) fn restricted_scan(
    s: &Scenario,
    opts: &SolverOptions,
) -> Result<(Vec<Candidate>, FastPathSummary)> {
    let mut candidates = all_not_evaluated(s);
    let mut summary = FastPathSummary::default();
    thresholds(s, &mut summary);
    if let (Some(l), Some(u)) = (summary.alpha_lower, summary.alpha_upper) {
        if s.alpha > l {
            match time_rule(s) {
                Ok(Theorem1Outcome::Index(q)) => {
                    candidates[q.get() - 1] = candidate(q, s, opts)?;
                    summary.rule = FastPathRule::TimeRegime;
                    summary.shortlist = vec![q];
                    summary.predicted = Some(q);
                }
                Ok(Theorem1Outcome::NoConsistentQ) => {
                    summary.note = Some("no index satisfies the spacing bounds".into())
                }
                Err(e) => summary.note = Some(e.to_string()),
            }
        } else if s.alpha <= u {
            let last_k = s.last_index();
            let last = candidate(last_k, s, opts)?;
            candidates[last_k.get() - 1] = last;
            if let Some(sol) = last.solution {
                match theorem2_shortlist(s, &sol, sol.v_m)? {
                    Theorem2Outcome::Shortlist(pair) => {
                        candidates[0] = candidate(pair[0], s, opts)?;
                        summary.rule = FastPathRule::EnergyRegime;
                        summary.shortlist = pair.to_vec();
                        summary.predicted = cheaper(&candidates[0], &candidates[last_k.get() - 1]);
                    }
                    Theorem2Outcome::NotApplicable => {
                        summary.note =
                            Some("waiting behind the platoon is too slow for the shortlist".into())
                    }
                }
            }
        }
    }
    let drivable = candidates
        .iter()
        .any(|c| c.feasibility.is_some_and(|f| f.is_feasible()));
    if summary.rule == FastPathRule::None || !drivable {
        for c in candidates.iter_mut().filter(|c| !c.evaluated) {
            *c = candidate(c.k, s, opts)?;
        }
        if summary.rule != FastPathRule::None {
            summary.note =
                Some("shortlisted plans break an actuator limit; scanned every index".into());
        }
    }
    Ok((candidates, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{optimal_index, optimal_index_with, FastPathMode};
    use crate::types::fixtures::{platoon_scenario, spread_platoon};
    use crate::types::{Hdv, VehicleState};
    use approx::assert_relative_eq;

    #[test]
    fn alpha_lower_example() {
        let e_max = energy_upper_estimate(33.0, 20.0, 3.0, 3, 30.0, 0.0, 5.0);
        assert_eq!(e_max, 244.5);
        let d_t = 1.0 / 3.0;
        let a = alpha_lower(e_max, 30.0, 30.0, (-3.0f64).exp(), 3, d_t);
        assert_relative_eq!(
            a,
            244.5 / (245.5 + (-6.0f64).exp() * d_t),
            max_relative = 1e-15
        );
        assert_eq!((a * 1e4).round() / 1e4, 0.9959);
        assert_eq!(
            alpha_lower(e_max, 30.0, 30.0, 0.3, 3, 0.0),
            e_max / (e_max + 1.0)
        );
        assert_eq!(
            alpha_lower(e_max, 30.0, 30.0, 0.3, 1, 2.0),
            e_max / (e_max + 1.0 + 2.0)
        );
    }

    #[test]
    fn alpha_upper_example() {
        let a = alpha_upper(25.0, 30.0, 30.0, 0.5, 2, 1.0 / 3.0);
        assert_relative_eq!(a, 12.5 / 15.0, max_relative = 1e-15);
        assert_eq!(alpha_upper(0.0, 30.0, 30.0, 0.5, 2, 1.0), 0.0);
    }

    #[test]
    fn geometric_sum_near_one() {
        assert_eq!(geometric_sum(1.0, 4), 4.0);
        assert_relative_eq!(geometric_sum(1.0 - 1e-13, 3), 3.0, max_relative = 1e-12);
        assert_relative_eq!(geometric_sum(0.5, 3), 1.75, max_relative = 1e-15);
    }

    #[test]
    fn thresholds_need_uniform_platoon() {
        let mut s = platoon_scenario();
        s.hdvs[2] = Hdv::cruising(190.0, 25.0);
        assert!(matches!(
            alpha_lower_threshold(&s),
            Err(Error::AssumptionViolated(_))
        ));
        assert!(matches!(
            alpha_upper_threshold(&s),
            Err(Error::AssumptionViolated(_))
        ));
        assert!(matches!(
            theorem1_index(&s, 10.0, 0.1),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn fast_merging_speed_means_first() {
        let s = spread_platoon();
        assert_eq!(
            theorem1_index(&s, 25.0, 0.0).unwrap(),
            Theorem1Outcome::Index(s.index(1).unwrap())
        );
    }

    #[test]
    fn wide_spacing_means_first() {
        let s = spread_platoon();
        // Tiny disruption scale makes every lower bound hold and every upper bound fail.
        assert_eq!(
            theorem1_index(&s, 5.0, 1e-6).unwrap(),
            Theorem1Outcome::Index(s.index(1).unwrap())
        );
    }

    #[test]
    fn large_disruption_means_last() {
        let s = spread_platoon();
        let q = theorem1_index(&s, 5.0, 1e6).unwrap();
        assert_eq!(q, Theorem1Outcome::Index(s.last_index()));
    }

    fn shortlist_scenario() -> Scenario {
        let mut s = platoon_scenario();
        s.av = VehicleState::new(0.0, 20.0);
        s
    }

    fn last_with_travel(s: &Scenario, travel: f64) -> IndexSolution {
        IndexSolution {
            k: s.last_index(),
            t_m: s.t0 + travel,
            v_m: 20.0,
            cost: Default::default(),
            total: 0.0,
        }
    }

    #[test]
    fn shortlist_threshold_examples() {
        let s = shortlist_scenario();
        let pair = [s.index(1).unwrap(), s.last_index()];
        let at = last_with_travel(&s, 20.0);
        assert_eq!(
            theorem2_shortlist(&s, &at, 20.0).unwrap(),
            Theorem2Outcome::Shortlist(pair)
        );
        let late = last_with_travel(&s, 25.0);
        assert_eq!(
            theorem2_shortlist(&s, &late, 20.0).unwrap(),
            Theorem2Outcome::NotApplicable
        );
    }

    #[test]
    fn restricted_scan_matches_full_scan_on_fixture() {
        let base = spread_platoon();
        for alpha in [0.0, 0.02, 0.5, 0.999, 1.0] {
            let s = base.with_alpha(alpha);
            let full = optimal_index(&s).unwrap();
            let only = optimal_index_with(
                &s,
                &SolverOptions {
                    fast_path: FastPathMode::Only,
                    ..SolverOptions::default()
                },
            )
            .unwrap();
            let summary = only.fast_path.clone().unwrap();
            if summary.rule == FastPathRule::None {
                assert_eq!(only.k, full.k);
            }
            let solved = only
                .candidates
                .iter()
                .filter(|c| c.solution.is_some())
                .count();
            assert!(summary.rule == FastPathRule::None || solved <= 2);
        }
    }
}
