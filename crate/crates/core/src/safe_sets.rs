//! Admissible merging speeds and merging times for each sequence index.
//!
//! In sequence `k` the AV must cross the merge point at least `phi_c * v_m + delta`
//! behind HDV `k - 1` and at least `phi_h * v_d_k + delta` ahead of HDV `k`.
//! HDVs cruise at their desired speed, so both conditions become bounds on the
//! merging time: a lower bound affine in `v_m` and a constant upper bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::speed_feasible_horizon;
use crate::types::{Scenario, SequenceIndex};

/// Slack granted to membership tests so that points computed on a window
/// boundary are not rejected by rounding.
pub const WINDOW_TOL: f64 = 1e-9;

/// `t = intercept + slope * v_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineBound {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineBound {
    pub fn at(&self, v_m: f64) -> f64 {
        self.intercept + self.slope * v_m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeWindow {
    pub k: SequenceIndex,
    /// Largest admissible merging speed, clamped to `[0, v_max]`.
    pub v_upper: f64,
    pub t_lower: AffineBound,
    /// Latest admissible merging time; `f64::INFINITY` when no HDV follows.
    pub t_upper: f64,
}

impl SafeWindow {
    /// Admissible merging-time interval at speed `v_m`, if nonempty.
    pub fn time_interval(&self, v_m: f64) -> Option<(f64, f64)> {
        let lo = self.t_lower.at(v_m);
        (lo <= self.t_upper).then_some((lo, self.t_upper))
    }

    pub fn contains(&self, t_m: f64, v_m: f64) -> bool {
        v_m >= -WINDOW_TOL
            && v_m <= self.v_upper + WINDOW_TOL
            && t_m >= self.t_lower.at(v_m) - WINDOW_TOL
            && t_m <= self.t_upper + WINDOW_TOL
    }
}

/// Position of HDV `hdv_index` at time `t`, cruising at its desired speed.
pub fn hdv_position_at(hdv_index: usize, t: f64, scenario: &Scenario) -> Result<f64> {
    let hdv = scenario.hdv(hdv_index)?;
    if t < scenario.t0 {
        return Err(Error::TimeBeforeObservation { t, t0: scenario.t0 });
    }
    Ok(hdv.state.position + (t - scenario.t0) * hdv.desired_speed)
}

/// Lower merging-time bound imposed by the leading HDV, affine in `v_m`.
fn lower_bound(k: SequenceIndex, s: &Scenario) -> Result<AffineBound> {
    let Some(lead) = k.leader() else {
        return Ok(AffineBound {
            slope: 0.0,
            intercept: s.t0,
        });
    };
    let h = s.hdv(lead)?;
    let lim = &s.limits;
    Ok(AffineBound {
        slope: lim.phi_c / h.desired_speed,
        intercept: s.t0 + (s.l_cz + lim.delta - h.state.position) / h.desired_speed,
    })
}

fn upper_bound(k: SequenceIndex, s: &Scenario) -> Result<f64> {
    let Some(follow) = k.follower(s.hdv_count()) else {
        return Ok(f64::INFINITY);
    };
    let h = s.hdv(follow)?;
    let lim = &s.limits;
    let v_d = h.desired_speed;
    Ok(s.t0 + (s.l_cz - lim.phi_h * v_d - lim.delta - h.state.position) / v_d)
}

/// Largest merging speed the gap between HDVs `k - 1` and `k` admits at
/// `t_probe`, clamped to `[0, v_max]`; `v_max` when either neighbor is absent.
pub fn merging_speed_bound(k: SequenceIndex, t_probe: f64, scenario: &Scenario) -> Result<f64> {
    let s = scenario;
    let lim = &s.limits;
    match (k.leader(), k.follower(s.hdv_count())) {
        (Some(lead), Some(follow)) => {
            let z = hdv_position_at(lead, t_probe, s)? - hdv_position_at(follow, t_probe, s)?;
            let v_d = s.hdv(follow)?.desired_speed;
            Ok(((z - lim.phi_h * v_d - 2.0 * lim.delta) / lim.phi_c).clamp(0.0, lim.v_max))
        }
        _ => Ok(lim.v_max),
    }
}

/// Safe window of index `k`, with the inter-HDV gap evaluated at `t_probe`.
pub fn safe_window(k: SequenceIndex, t_probe: f64, scenario: &Scenario) -> Result<SafeWindow> {
    let s = scenario;
    let n = s.hdv_count();
    if k.get() > n + 1 {
        return Err(Error::IndexOutOfRange {
            index: k.get(),
            max: n + 1,
        });
    }
    if t_probe < s.t0 {
        return Err(Error::TimeBeforeObservation {
            t: t_probe,
            t0: s.t0,
        });
    }
    let window = SafeWindow {
        k,
        v_upper: merging_speed_bound(k, t_probe, s)?,
        t_lower: lower_bound(k, s)?,
        t_upper: upper_bound(k, s)?,
    };
    if window.v_upper <= 0.0 || window.t_lower.at(0.0) > window.t_upper || window.t_upper <= s.t0 {
        return Err(Error::EmptyWindow { k: k.get() });
    }
    Ok(window)
}

/// Longest horizon searched when no HDV bounds the merging time from above.
pub fn horizon_cap(scenario: &Scenario) -> f64 {
    3.0 * scenario.av_distance() / scenario.limits.v_min.max(1.0)
}

/// The set of merging points `(t_m, v_m)` the per-index optimization ranges
/// over: the safe window intersected with the horizons whose minimum-energy
/// trajectory keeps the AV speed within limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeRegion {
    pub window: SafeWindow,
    pub v_range: (f64, f64),
    t0: f64,
    distance: f64,
    v0: f64,
    cap: f64,
    limits: crate::types::ConstraintLimits,
}

impl MergeRegion {
    pub fn new(k: SequenceIndex, scenario: &Scenario) -> Result<Self> {
        let s = scenario;
        let window = safe_window(k, s.t0, s)?;
        // The gap between unequal-speed HDVs changes linearly, so its widest
        // point over [t0, t_upper] sits at an end.
        let mut v_hi = window.v_upper;
        if window.t_upper.is_finite() {
            v_hi = v_hi.max(merging_speed_bound(k, window.t_upper, s)?);
        }
        let v_lo = s.limits.v_min.max(0.0);
        if v_hi < v_lo {
            return Err(Error::EmptyWindow { k: k.get() });
        }
        Ok(Self {
            window: SafeWindow {
                v_upper: v_hi,
                ..window
            },
            v_range: (v_lo, v_hi),
            t0: s.t0,
            distance: s.av_distance(),
            v0: s.av.velocity,
            cap: s.t0 + horizon_cap(s),
            limits: s.limits,
        })
    }

    /// Admissible merging times at speed `v_m`, if any.
    pub fn time_interval(&self, v_m: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.window.time_interval(v_m)?;
        let (t_min, t_max) = speed_feasible_horizon(self.distance, self.v0, v_m, &self.limits)?;
        let lo = lo.max(self.t0 + t_min);
        let hi = hi.min(self.t0 + t_max).min(self.cap);
        (lo <= hi && hi > self.t0).then_some((lo, hi))
    }

    pub fn contains(&self, t_m: f64, v_m: f64) -> bool {
        v_m >= self.v_range.0 - WINDOW_TOL
            && v_m <= self.v_range.1 + WINDOW_TOL
            && self
                .time_interval(v_m.clamp(self.v_range.0, self.v_range.1))
                .is_some_and(|(lo, hi)| t_m >= lo - WINDOW_TOL && t_m <= hi + WINDOW_TOL)
    }
}

/// Signed slacks of the gap constraints at the merging instant (negative = violated).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    /// AV behind the leading HDV: `x_{k-1} - L - (phi_c v_m + delta)`.
    pub lead_margin: Option<f64>,
    /// Following HDV behind the AV: `L - x_k - (phi_h v_d_k + delta)`.
    pub trail_margin: Option<f64>,
    /// Sum of the two, i.e. the gap between HDVs `k - 1` and `k` minus what the AV needs.
    pub combined_margin: Option<f64>,
}

impl GapCheck {
    /// The combined gap condition, falling back to the single existing neighbor.
    pub fn is_safe(&self) -> bool {
        let margin = self
            .combined_margin
            .or(self.lead_margin)
            .or(self.trail_margin);
        margin.is_none_or(|m| m >= -WINDOW_TOL)
    }

    pub fn components_hold(&self) -> bool {
        [self.lead_margin, self.trail_margin]
            .into_iter()
            .flatten()
            .all(|m| m >= -WINDOW_TOL)
    }
}

/// Gap constraints for the AV crossing the merge point at `t_m` with speed `v_m`.
pub fn check_safe_gap(k: SequenceIndex, t_m: f64, v_m: f64, scenario: &Scenario) -> GapCheck {
    let s = scenario;
    let lim = &s.limits;
    let n = s.hdv_count();
    let elapsed = (t_m - s.t0).max(0.0);
    let position = |i: usize| s.hdvs[i - 1].state.position + elapsed * s.hdvs[i - 1].desired_speed;

    let lead_margin = k
        .leader()
        .filter(|&i| i <= n)
        .map(|i| position(i) - s.l_cz - (lim.phi_c * v_m + lim.delta));
    let trail_margin = k.follower(n).map(|i| {
        let v_d = s.hdvs[i - 1].desired_speed;
        s.l_cz - position(i) - (lim.phi_h * v_d + lim.delta)
    });
    let combined_margin = match (k.leader(), k.follower(n)) {
        (Some(a), Some(b)) => {
            let v_d = s.hdvs[b - 1].desired_speed;
            Some(position(a) - position(b) - (lim.phi_c * v_m + lim.phi_h * v_d + 2.0 * lim.delta))
        }
        _ => None,
    };
    GapCheck {
        lead_margin,
        trail_margin,
        combined_margin,
    }
}
