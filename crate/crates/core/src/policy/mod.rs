//! Index selection: optimize every sequence index, then pick the cheapest one
//! whose trajectory the AV can actually drive.

mod fast_path;
mod search;

use serde::{Deserialize, Serialize};

pub use fast_path::{
    alpha_lower, alpha_lower_threshold, alpha_upper, alpha_upper_threshold, common_merging_speed,
    energy_upper_estimate, geometric_sum, theorem1_index, theorem2_shortlist, time_rule_inputs,
    FastPathRule, FastPathSummary, Theorem1Outcome, Theorem2Outcome,
};
pub use search::{optimize_index, optimize_index_with, IndexSolution};

use crate::disruption::{hdv_cost, HdvCost};
use crate::error::{Error, Result};
use crate::safe_sets::check_safe_gap;
use crate::trajectory::{
    energy_closed_form, feasibility, solve_coefficients, FeasibilityReport, TrajectoryCoefficients,
};
use crate::types::{Scenario, SequenceIndex};

/// Cost of sequence `k` split into its AV and HDV parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// AV travel time to the merge point (s).
    pub av_time: f64,
    pub av_energy: f64,
    pub hdv: HdvCost,
}

impl CostBreakdown {
    pub fn av_part(&self, alpha: f64) -> f64 {
        alpha * self.av_time + (1.0 - alpha) * self.av_energy
    }

    pub fn hdv_part(&self, alpha: f64) -> f64 {
        alpha * (self.hdv.undisrupted_time_sum + self.hdv.time_disruption)
            + (1.0 - alpha) * self.hdv.energy_disruption
    }

    pub fn total(&self, alpha: f64) -> f64 {
        alpha * (self.av_time + self.hdv.undisrupted_time_sum + self.hdv.time_disruption)
            + (1.0 - alpha) * (self.av_energy + self.hdv.energy_disruption)
    }
}

/// Cost terms without the window check; the optimizer only visits admissible points.
pub(crate) fn breakdown(
    k: SequenceIndex,
    t_m: f64,
    v_m: f64,
    s: &Scenario,
) -> Result<CostBreakdown> {
    Ok(CostBreakdown {
        av_time: t_m - s.t0,
        av_energy: energy_closed_form(s.av.position, s.av.velocity, s.t0, s.l_cz, v_m, t_m)?,
        hdv: hdv_cost(k, v_m, t_m, s)?,
    })
}

/// Cost of merging as vehicle `k` at time `t_m` with speed `v_m`.
pub fn cost_at(k: SequenceIndex, t_m: f64, v_m: f64, scenario: &Scenario) -> Result<CostBreakdown> {
    if k.get() > scenario.hdv_count() + 1 {
        return Err(Error::IndexOutOfRange {
            index: k.get(),
            max: scenario.hdv_count() + 1,
        });
    }
    if !(v_m >= 0.0) || !check_safe_gap(k, t_m, v_m, scenario).components_hold() {
        return Err(Error::UnsafePoint {
            k: k.get(),
            t_m,
            v_m,
        });
    }
    breakdown(k, t_m, v_m, scenario)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FastPathMode {
    /// Full scan over every index.
    #[default]
    Off,
    /// Full scan, plus the closed-form rules evaluated alongside for comparison.
    Advisory,
    /// Closed-form rules decide which indices get optimized; full scan only when no rule applies.
    Only,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Coarse grid points along the merging time.
    pub grid_t: usize,
    /// Coarse grid points along the merging speed.
    pub grid_v: usize,
    pub refine_tol: f64,
    pub fast_path: FastPathMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_t: 64,
            grid_v: 64,
            refine_tol: 1e-6,
            fast_path: FastPathMode::Off,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    EmptyWindow,
    /// The optimal trajectory of this index breaks a speed or acceleration limit.
    ActuatorInfeasible {
        v_range: (f64, f64),
        u_range: (f64, f64),
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedIndex {
    pub k: SequenceIndex,
    pub reason: SkipReason,
}

/// Outcome of the per-index optimization for one index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: SequenceIndex,
    /// `None` when the window is empty or the index was not evaluated.
    pub solution: Option<IndexSolution>,
    pub feasibility: Option<FeasibilityReport>,
    pub evaluated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergePlan {
    pub k: SequenceIndex,
    pub t_m: f64,
    pub v_m: f64,
    pub coeffs: TrajectoryCoefficients,
    pub cost: CostBreakdown,
    pub total: f64,
    pub feasible: FeasibilityReport,
    /// The cheapest index was rejected for infeasibility.
    pub fallback_applied: bool,
    /// Sorted by `k`.
    pub skipped_indices: Vec<SkippedIndex>,
    /// One entry per index `1..=N+1`.
    pub candidates: Vec<Candidate>,
    pub fast_path: Option<FastPathSummary>,
}

impl MergePlan {
    /// Plan through a given merging point with no optimization and no window
    /// check; `candidates` stays empty.
    pub fn at_point(k: SequenceIndex, t_m: f64, v_m: f64, scenario: &Scenario) -> Result<Self> {
        let s = scenario;
        let coeffs = solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, v_m, t_m)?;
        let cost = breakdown(k, t_m, v_m, s)?;
        Ok(Self {
            k,
            t_m,
            v_m,
            coeffs,
            cost,
            total: cost.total(s.alpha),
            feasible: feasibility(&coeffs, &s.limits),
            fallback_applied: false,
            skipped_indices: Vec::new(),
            candidates: Vec::new(),
            fast_path: None,
        })
    }

    /// Index with the lowest optimal cost before any feasibility filtering.
    pub fn unfiltered_argmin(&self) -> Option<SequenceIndex> {
        ranked(&self.candidates).first().map(|c| c.k)
    }
}

/// Solved candidates ordered by cost, ties going to the smaller index.
fn ranked(candidates: &[Candidate]) -> Vec<&Candidate> {
    let mut solved: Vec<&Candidate> = candidates.iter().filter(|c| c.solution.is_some()).collect();
    solved.sort_by(|a, b| {
        let (ca, cb) = (a.solution.unwrap().total, b.solution.unwrap().total);
        ca.total_cmp(&cb).then(a.k.cmp(&b.k))
    });
    solved
}

pub(crate) fn candidate(k: SequenceIndex, s: &Scenario, opts: &SolverOptions) -> Result<Candidate> {
    match optimize_index_with(k, s, opts) {
        Ok(sol) => {
            let coeffs =
                solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, sol.v_m, sol.t_m)?;
            Ok(Candidate {
                k,
                solution: Some(sol),
                feasibility: Some(feasibility(&coeffs, &s.limits)),
                evaluated: true,
            })
        }
        Err(Error::EmptyWindow { .. }) => Ok(Candidate {
            k,
            solution: None,
            feasibility: None,
            evaluated: true,
        }),
        Err(e) => Err(e),
    }
}

fn not_evaluated(k: SequenceIndex) -> Candidate {
    Candidate {
        k,
        solution: None,
        feasibility: None,
        evaluated: false,
    }
}

/// Optimal index and trajectory with default solver options.
pub fn optimal_index(scenario: &Scenario) -> Result<MergePlan> {
    optimal_index_with(scenario, &SolverOptions::default())
}

pub fn optimal_index_with(scenario: &Scenario, opts: &SolverOptions) -> Result<MergePlan> {
    let s = scenario;
    match opts.fast_path {
        FastPathMode::Off => {
            let candidates = full_scan(s, opts)?;
            select(s, opts, candidates, None)
        }
        FastPathMode::Advisory => {
            let candidates = full_scan(s, opts)?;
            let mut plan = select(s, opts, candidates, None)?;
            let mut summary = fast_path::summarize(s, &plan.candidates);
            summary.agrees_with_scan = summary
                .predicted
                .map(|k| Some(k) == plan.unfiltered_argmin());
            plan.fast_path = Some(summary);
            Ok(plan)
        }
        FastPathMode::Only => {
            let (candidates, summary) = fast_path::restricted_scan(s, opts)?;
            select(s, opts, candidates, Some(summary))
        }
    }
}

fn full_scan(s: &Scenario, opts: &SolverOptions) -> Result<Vec<Candidate>> {
    s.indices().map(|k| candidate(k, s, opts)).collect()
}

/// Walks the candidates cheapest first and emits the first drivable plan.
fn select(
    s: &Scenario,
    opts: &SolverOptions,
    candidates: Vec<Candidate>,
    fast_path: Option<FastPathSummary>,
) -> Result<MergePlan> {
    let mut skipped: Vec<SkippedIndex> = candidates
        .iter()
        .filter(|c| c.evaluated && c.solution.is_none())
        .map(|c| SkippedIndex {
            k: c.k,
            reason: SkipReason::EmptyWindow,
        })
        .collect();
    let mut chosen = None;
    for c in ranked(&candidates) {
        let report = c
            .feasibility
            .expect("solved candidates carry a feasibility report");
        if report.is_feasible() {
            chosen = Some((c.k, c.solution.unwrap(), report));
            break;
        }
        skipped.push(SkippedIndex {
            k: c.k,
            reason: SkipReason::ActuatorInfeasible {
                v_range: report.v_range,
                u_range: report.u_range,
            },
        });
    }
    let first_ranked = ranked(&candidates).first().map(|c| c.k);
    let (k, sol, report, resolved) = match chosen {
        Some((k, sol, report)) => (k, sol, report, false),
        None => {
            // Waiting behind every HDV leaves the most room; search it again
            // with the actuator limits as a hard constraint.
            let last = s.last_index();
            let sol =
                search::optimize_index_masked(last, s, opts).map_err(|_| Error::NoFeasiblePlan)?;
            let coeffs =
                solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, sol.v_m, sol.t_m)?;
            let report = feasibility(&coeffs, &s.limits);
            if !report.is_feasible() {
                return Err(Error::NoFeasiblePlan);
            }
            (last, sol, report, true)
        }
    };
    skipped.sort_by_key(|x| x.k);
    let coeffs = solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, sol.v_m, sol.t_m)?;
    Ok(MergePlan {
        k,
        t_m: sol.t_m,
        v_m: sol.v_m,
        coeffs,
        cost: sol.cost,
        total: sol.total,
        feasible: report,
        fallback_applied: resolved || first_ranked != Some(k),
        skipped_indices: skipped,
        candidates,
        fast_path,
    })
}

pub(crate) fn all_not_evaluated(s: &Scenario) -> Vec<Candidate> {
    s.indices().map(not_evaluated).collect()
}
