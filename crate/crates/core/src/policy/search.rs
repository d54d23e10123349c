//! Per-index minimization over the admissible merging region.
//!
//! The region is parameterized as `t = lo(v) + theta * (hi(v) - lo(v))` with
//! `theta` in `[0, 1]`, which turns the curved time bounds into a box. A coarse
//! grid locates the basin, then nested golden-section searches refine it.
//! Boundary optima stay on `theta = 0` or `theta = 1` while `v` moves, so the
//! refinement can slide along an active time bound.

use serde::{Deserialize, Serialize};

use super::{breakdown, CostBreakdown, SolverOptions};
use crate::error::{Error, Result};
use crate::safe_sets::MergeRegion;
use crate::trajectory::{feasibility, solve_coefficients};
use crate::types::{Scenario, SequenceIndex};

/// Optimal merging point of one sequence index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSolution {
    pub k: SequenceIndex,
    pub t_m: f64,
    pub v_m: f64,
    pub cost: CostBreakdown,
    /// `cost.total(alpha)` at the scenario's weight.
    pub total: f64,
}

const MAX_RECENTER: usize = 50;
/// Half-width of the inner bracket, in coarse grid cells.
const THETA_CELLS: f64 = 4.0;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

struct Objective<'a> {
    k: SequenceIndex,
    s: &'a Scenario,
    region: MergeRegion,
    /// Treat trajectories breaking an actuator limit as unreachable.
    actuator_mask: bool,
}

impl Objective<'_> {
    fn time(&self, v: f64, theta: f64) -> Option<f64> {
        let (lo, hi) = self.region.time_interval(v)?;
        Some(if theta >= 1.0 {
            hi
        } else {
            lo + theta * (hi - lo)
        })
    }

    fn eval(&self, v: f64, theta: f64) -> f64 {
        let Some(t) = self.time(v, theta) else {
            return f64::INFINITY;
        };
        let s = self.s;
        if self.actuator_mask {
            let feasible = solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, v, t)
                .is_ok_and(|c| feasibility(&c, &s.limits).is_feasible());
            if !feasible {
                return f64::INFINITY;
            }
        }
        breakdown(self.k, t, v, s).map_or(f64::INFINITY, |c| c.total(s.alpha))
    }
}

/// Golden-section search on `[lo, hi]`; returns the best point seen, ends included.
fn line_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let mut best = (lo, f(lo));
    let mut consider = |x: f64, fx: f64| {
        if fx < best.1 {
            best = (x, fx);
        }
    };
    let f_hi = f(hi);
    consider(hi, f_hi);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    consider(c, fc);
    consider(d, fd);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            consider(d, fd);
        }
    }
    best
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        lo
    } else if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

fn minimize(obj: &Objective, opts: &SolverOptions) -> Result<IndexSolution> {
    let (v_lo, v_hi) = obj.region.v_range;
    let (n_t, n_v) = (opts.grid_t.max(2), opts.grid_v.max(2));
    let tol = opts.refine_tol;

    let mut best = (v_lo, 0.0, f64::INFINITY);
    for j in 0..n_v {
        let v = linspace(v_lo, v_hi, n_v, j);
        if obj.region.time_interval(v).is_none() {
            continue;
        }
        for i in 0..n_t {
            let theta = linspace(0.0, 1.0, n_t, i);
            let f = obj.eval(v, theta);
            if f < best.2 {
                best = (v, theta, f);
            }
        }
    }
    let (mut v, mut theta, mut f) = best;
    if !f.is_finite() {
        return Err(Error::EmptyWindow { k: obj.k.get() });
    }

    // Nested line searches: the outer one in v minimizes the profile
    // min over theta, so valleys running diagonally in (v, theta) cost nothing
    // extra. Brackets re-center while the optimum sits on their edge.
    let h_v = (v_hi - v_lo) / (n_v - 1) as f64;
    let h_theta = THETA_CELLS / (n_t - 1) as f64;
    for _ in 0..MAX_RECENTER {
        let t_span = obj.region.time_interval(v).map_or(0.0, |(lo, hi)| hi - lo);
        let theta_bracket = ((theta - h_theta).max(0.0), (theta + h_theta).min(1.0));
        let theta_tol = if t_span > 0.0 {
            0.1 * tol / t_span
        } else {
            1.0
        };
        let profile = |x: f64| {
            line_min(
                |th| obj.eval(x, th),
                theta_bracket.0,
                theta_bracket.1,
                theta_tol,
            )
        };
        let v_bracket = ((v - h_v).max(v_lo), (v + h_v).min(v_hi));
        let (nv, nf) = if h_v > 0.0 {
            line_min(|x| profile(x).1, v_bracket.0, v_bracket.1, 0.1 * tol)
        } else {
            (v, profile(v).1)
        };
        if !(nf < f) {
            break;
        }
        let (nt, _) = profile(nv);
        let moved_to_edge = |x: f64, (lo, hi): (f64, f64), (min, max): (f64, f64)| {
            (x - lo <= tol && lo > min) || (hi - x <= tol && hi < max)
        };
        let recenter = moved_to_edge(nv, v_bracket, (v_lo, v_hi))
            || moved_to_edge(nt, theta_bracket, (0.0, 1.0));
        (v, theta, f) = (nv, nt, nf);
        if !recenter {
            break;
        }
    }

    let t = obj
        .time(v, theta)
        .expect("refined point stays in the region");
    let cost = breakdown(obj.k, t, v, obj.s)?;
    Ok(IndexSolution {
        k: obj.k,
        t_m: t,
        v_m: v,
        cost,
        total: f,
    })
}

/// Optimal merging time and speed of index `k`, default solver options.
pub fn optimize_index(k: SequenceIndex, scenario: &Scenario) -> Result<IndexSolution> {
    optimize_index_with(k, scenario, &SolverOptions::default())
}

pub fn optimize_index_with(
    k: SequenceIndex,
    scenario: &Scenario,
    opts: &SolverOptions,
) -> Result<IndexSolution> {
    let obj = Objective {
        k,
        s: scenario,
        region: MergeRegion::new(k, scenario)?,
        actuator_mask: false,
    };
    minimize(&obj, opts)
}

/// Same search restricted to trajectories within every actuator limit.
pub(crate) fn optimize_index_masked(
    k: SequenceIndex,
    scenario: &Scenario,
    opts: &SolverOptions,
) -> Result<IndexSolution> {
    let obj = Objective {
        k,
        s: scenario,
        region: MergeRegion::new(k, scenario)?,
        actuator_mask: true,
    };
    minimize(&obj, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::fixtures::platoon_scenario;

    #[test]
    fn golden_section_finds_interior_and_end_minima() {
        let (x, _) = line_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        let (x, fx) = line_min(|x| x, 2.0, 5.0, 1e-9);
        assert_eq!((x, fx), (2.0, 2.0));
    }

    #[test]
    fn refinement_never_worse_than_grid() {
        let s = platoon_scenario().with_alpha(0.0);
        let k = s.last_index();
        let coarse = SolverOptions {
            refine_tol: f64::INFINITY,
            ..SolverOptions::default()
        };
        let grid_only = optimize_index_with(k, &s, &coarse).unwrap();
        let refined = optimize_index(k, &s).unwrap();
        assert!(refined.total <= grid_only.total);
        // Zero-control crossing is admissible here, so the energy optimum is zero.
        assert!(refined.total < 1e-6, "{}", refined.total);
    }

    #[test]
    fn nearly_singleton_region_returns_its_boundary() {
        // Gap leaves room for merging speeds up to 1e-3 only, where the
        // leader's bound meets the follower's.
        let mut s = platoon_scenario();
        s.hdvs = vec![
            crate::types::Hdv::cruising(-345.0 + 1e-3, 25.0),
            crate::types::Hdv::cruising(-380.0, 25.0),
        ];
        let k = s.index(2).unwrap();
        let sol = optimize_index(k, &s).unwrap();
        assert!(sol.v_m <= 1e-3 + 1e-12);
        assert!((sol.t_m - 30.0).abs() <= 1e-4);
        assert!(crate::safe_sets::check_safe_gap(k, sol.t_m, sol.v_m, &s).components_hold());
    }

    #[test]
    fn masked_search_respects_limits() {
        let mut s = platoon_scenario();
        s.limits.u_max = 0.4;
        let k = s.last_index();
        let sol = optimize_index_masked(k, &s, &SolverOptions::default()).unwrap();
        let c = solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, sol.v_m, sol.t_m)
            .unwrap();
        assert!(feasibility(&c, &s.limits).is_feasible());
    }
}
