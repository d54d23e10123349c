//! Dense-grid reference solver.
//!
//! Deliberately shares nothing with the policy optimizer: the admissible
//! region is rebuilt here from the gap rules, and the objective is assembled
//! from the base disruption and discount primitives directly.

use serde::{Deserialize, Serialize};

use crate::disruption::{
    base_energy_disruption, base_time_disruption, discount_factor, undisrupted_travel_time,
};
use crate::error::{Error, Result};
use crate::safe_sets::horizon_cap;
use crate::trajectory::{
    energy_closed_form, feasibility, solve_coefficients, speed_feasible_horizon,
};
use crate::types::{Scenario, SequenceIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub n_t: usize,
    pub n_v: usize,
    /// Only grid points whose trajectory respects every actuator limit count.
    pub actuator_filter: bool,
    /// Fault injection for sensitivity checks: discounted disruptions are
    /// subtracted instead of added.
    #[doc(hidden)]
    pub flip_discount_sign: bool,
}

impl OracleOptions {
    pub fn grid(n_t: usize, n_v: usize) -> Self {
        Self {
            n_t,
            n_v,
            actuator_filter: false,
            flip_discount_sign: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub k: SequenceIndex,
    pub t_m: f64,
    pub v_m: f64,
    pub cost: f64,
    /// The trajectory through the best grid point respects every limit.
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Best grid point of every index with a nonempty region, ordered by `k`.
    pub per_k: Vec<OracleEntry>,
    pub empty: Vec<SequenceIndex>,
    /// `None` only when every region is empty.
    pub argmin_k: Option<SequenceIndex>,
    pub grid_resolution: (usize, usize),
}

impl OracleResult {
    pub fn entry(&self, k: SequenceIndex) -> Option<&OracleEntry> {
        self.per_k.iter().find(|e| e.k == k)
    }

    pub fn min_cost(&self) -> Option<f64> {
        self.argmin_k.and_then(|k| self.entry(k)).map(|e| e.cost)
    }

    /// Cheapest index whose best grid point is drivable.
    pub fn feasible_argmin(&self) -> Option<&OracleEntry> {
        argmin(self.per_k.iter().filter(|e| e.feasible))
    }
}

fn argmin<'a>(entries: impl Iterator<Item = &'a OracleEntry>) -> Option<&'a OracleEntry> {
    // Strict comparison keeps the smaller index on ties.
    entries.fold(None, |best: Option<&OracleEntry>, e| match best {
        Some(b) if b.cost <= e.cost => Some(b),
        _ => Some(e),
    })
}

/// Exhaustive search on an `n_t` by `n_v` grid per index.
pub fn brute_force(scenario: &Scenario, n_t: usize, n_v: usize) -> Result<OracleResult> {
    brute_force_with(scenario, &OracleOptions::grid(n_t, n_v))
}

pub fn brute_force_with(scenario: &Scenario, opts: &OracleOptions) -> Result<OracleResult> {
    if opts.n_t < 2 || opts.n_v < 2 {
        return Err(Error::ParameterOutOfRange {
            name: "grid",
            value: opts.n_t.min(opts.n_v) as f64,
        });
    }
    let s = scenario;
    let mut per_k = Vec::new();
    let mut empty = Vec::new();
    for k in s.indices() {
        match best_for_index(k, s, opts)? {
            Some(e) => per_k.push(e),
            None => empty.push(k),
        }
    }
    let argmin_k = argmin(per_k.iter()).map(|e| e.k);
    Ok(OracleResult {
        per_k,
        empty,
        argmin_k,
        grid_resolution: (opts.n_t, opts.n_v),
    })
}

/// Grid coordinate `i` of `n` on `[lo, hi]`; nested grids (`n` and `2n - 1`)
/// share their common points bit for bit.
fn grid_point(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

struct Bounds {
    v_lo: f64,
    v_hi: f64,
    /// `t >= lead.0 + lead.1 * v`.
    lead: (f64, f64),
    trail: f64,
    cap: f64,
}

fn bounds(k: SequenceIndex, s: &Scenario) -> Result<Bounds> {
    let n = s.hdv_count();
    let lim = &s.limits;
    let lead = match k.leader() {
        Some(i) => {
            let h = s.hdv(i)?;
            (
                s.t0 + (s.l_cz + lim.delta - h.state.position) / h.desired_speed,
                lim.phi_c / h.desired_speed,
            )
        }
        None => (s.t0, 0.0),
    };
    let trail = match k.follower(n) {
        Some(i) => {
            let h = s.hdv(i)?;
            s.t0 + (s.l_cz - lim.phi_h * h.desired_speed - lim.delta - h.state.position)
                / h.desired_speed
        }
        None => f64::INFINITY,
    };
    let mut v_hi = lim.v_max;
    if let (Some(a), Some(b)) = (k.leader(), k.follower(n)) {
        let (ha, hb) = (s.hdv(a)?, s.hdv(b)?);
        let gap_at = |t: f64| {
            let dt = t - s.t0;
            (ha.state.position + ha.desired_speed * dt)
                - (hb.state.position + hb.desired_speed * dt)
        };
        let widest = gap_at(s.t0).max(if trail.is_finite() {
            gap_at(trail.max(s.t0))
        } else {
            0.0
        });
        v_hi = v_hi.min((widest - lim.phi_h * hb.desired_speed - 2.0 * lim.delta) / lim.phi_c);
    }
    Ok(Bounds {
        v_lo: lim.v_min.max(0.0),
        v_hi,
        lead,
        trail,
        cap: s.t0 + horizon_cap(s),
    })
}

fn best_for_index(
    k: SequenceIndex,
    s: &Scenario,
    opts: &OracleOptions,
) -> Result<Option<OracleEntry>> {
    let b = bounds(k, s)?;
    if b.v_hi < b.v_lo {
        return Ok(None);
    }
    let n = s.hdv_count();
    let distance = s.av_distance();
    let alpha = s.alpha;
    let undisrupted: f64 = (1..=n)
        .map(|i| undisrupted_travel_time(i, s))
        .sum::<Result<f64>>()?;
    let sign = if opts.flip_discount_sign { -1.0 } else { 1.0 };

    // Discount weight of the HDVs behind HDV k; time-invariant when they all
    // share HDV k's speed.
    let follower = k.follower(n);
    let constant_weight = follower.map(|kk| {
        let v = s.hdvs[kk - 1].desired_speed;
        s.hdvs[kk..].iter().all(|h| h.desired_speed == v)
    });
    let weight_at = |t: f64| -> Result<f64> {
        let Some(kk) = follower else { return Ok(0.0) };
        let dt = t - s.t0;
        let hk = &s.hdvs[kk - 1];
        let x_k = hk.state.position + hk.desired_speed * dt;
        let mut w = 1.0;
        for h in &s.hdvs[kk..] {
            let x_i = h.state.position + h.desired_speed * dt;
            w += sign * discount_factor(s.model.beta, (x_k - x_i).max(0.0))?;
        }
        Ok(w)
    };
    let fixed_weight = match constant_weight {
        Some(true) => Some(weight_at(s.t0)?),
        _ => None,
    };

    let mut best: Option<OracleEntry> = None;
    for j in 0..opts.n_v {
        let v = grid_point(b.v_lo, b.v_hi, opts.n_v, j);
        let Some((t_min, t_max)) = speed_feasible_horizon(distance, s.av.velocity, v, &s.limits)
        else {
            continue;
        };
        let lo = (b.lead.0 + b.lead.1 * v).max(s.t0 + t_min);
        let hi = b.trail.min(s.t0 + t_max).min(b.cap);
        if !(lo <= hi) || hi <= s.t0 {
            continue;
        }
        let (d_t, d_e) = match follower {
            Some(kk) => {
                let v_d = s.hdvs[kk - 1].desired_speed;
                (
                    base_time_disruption(v_d, v, s.model.u_bar)?,
                    base_energy_disruption(v_d, v, s.model.u_bar)?,
                )
            }
            None => (0.0, 0.0),
        };
        for i in 0..opts.n_t {
            let t = grid_point(lo, hi, opts.n_t, i);
            if t <= s.t0 {
                continue;
            }
            if opts.actuator_filter {
                let c = solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, v, t)?;
                if !feasibility(&c, &s.limits).is_feasible() {
                    continue;
                }
            }
            let w = match fixed_weight {
                Some(w) => w,
                None => weight_at(t)?,
            };
            let energy = energy_closed_form(s.av.position, s.av.velocity, s.t0, s.l_cz, v, t)?;
            let cost =
                alpha * (t - s.t0 + undisrupted + w * d_t) + (1.0 - alpha) * (energy + w * d_e);
            if best.is_none_or(|e| cost < e.cost) {
                best = Some(OracleEntry {
                    k,
                    t_m: t,
                    v_m: v,
                    cost,
                    feasible: false,
                });
            }
        }
    }
    if let Some(e) = best.as_mut() {
        let c = solve_coefficients(s.av.position, s.av.velocity, s.t0, s.l_cz, e.v_m, e.t_m)?;
        e.feasible = feasibility(&c, &s.limits).is_feasible();
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::cost_at;
    use crate::types::fixtures::spread_platoon;

    #[test]
    fn no_hdvs_single_entry() {
        let mut s = spread_platoon();
        s.hdvs.clear();
        let r = brute_force(&s, 32, 32).unwrap();
        assert_eq!(r.per_k.len(), 1);
        assert_eq!(r.argmin_k.unwrap().get(), 1);
    }

    #[test]
    fn nested_grid_never_worse() {
        for alpha in [0.0, 0.4, 1.0] {
            let s = spread_platoon().with_alpha(alpha);
            let coarse = brute_force(&s, 33, 33).unwrap();
            let fine = brute_force(&s, 65, 65).unwrap();
            for e in &coarse.per_k {
                assert!(fine.entry(e.k).unwrap().cost <= e.cost);
            }
        }
    }

    #[test]
    fn grid_costs_match_policy_cost() {
        let s = spread_platoon();
        let r = brute_force(&s, 40, 40).unwrap();
        for e in &r.per_k {
            let c = cost_at(e.k, e.t_m, e.v_m, &s).unwrap().total(s.alpha);
            assert!((c - e.cost).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn flipped_discount_changes_costs() {
        // Time-dominant weights make the AV merge slower than the platoon.
        let s = spread_platoon().with_alpha(1.0);
        let honest = brute_force(&s, 40, 40).unwrap();
        let faulty = brute_force_with(
            &s,
            &OracleOptions {
                flip_discount_sign: true,
                ..OracleOptions::grid(40, 40)
            },
        )
        .unwrap();
        assert_ne!(honest.per_k, faulty.per_k);
    }

    #[test]
    fn grid_too_small_rejected() {
        assert!(brute_force(&spread_platoon(), 1, 10).is_err());
    }
}
