//! Time-stepped replay of a plan against constant-speed HDVs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::MergePlan;
use crate::types::Scenario;

/// Margins down to `-REPLAY_TOL` count as satisfied.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    /// Headway behind the HDV ahead at the merge instant.
    LeadGap,
    /// Headway of the HDV behind at the merge instant.
    TrailGap,
    SpeedMax,
    SpeedMin,
    AccelMax,
    AccelMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub constraint: ConstraintId,
    /// Signed slack; negative here.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplaySample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub u: f64,
    pub hdv_positions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayAudit {
    pub samples: Vec<ReplaySample>,
    /// At most one entry per constraint, at its worst instant; ordered by constraint.
    pub violations: Vec<Violation>,
}

impl ReplayAudit {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, id: ConstraintId) -> Option<&Violation> {
        self.violations.iter().find(|v| v.constraint == id)
    }
}

/// Worst slack of one constraint seen so far.
struct Worst {
    constraint: ConstraintId,
    t: f64,
    margin: f64,
}

impl Worst {
    fn new(constraint: ConstraintId) -> Self {
        Self {
            constraint,
            t: f64::NAN,
            margin: f64::INFINITY,
        }
    }

    fn see(&mut self, t: f64, margin: f64) {
        if margin < self.margin {
            self.t = t;
            self.margin = margin;
        }
    }

    fn violation(&self) -> Option<Violation> {
        (self.margin < -REPLAY_TOL).then_some(Violation {
            t: self.t,
            constraint: self.constraint,
            margin: self.margin,
        })
    }
}

/// Samples the plan every `dt` from `t0` to the merging instant (always the
/// last sample) and audits gap, speed and acceleration constraints. Limit
/// checks include the exact polynomial extrema, so the verdict does not
/// depend on `dt`.
pub fn replay(plan: &MergePlan, scenario: &Scenario, dt: f64) -> Result<ReplayAudit> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveParameter {
            name: "dt",
            value: dt,
        });
    }
    let s = scenario;
    let c = &plan.coeffs;
    let lim = &s.limits;
    let hdv_at =
        |i: usize, t: f64| s.hdvs[i - 1].state.position + s.hdvs[i - 1].desired_speed * (t - s.t0);

    let steps = ((plan.t_m - s.t0) / dt).ceil().max(1.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut worst = [
        Worst::new(ConstraintId::LeadGap),
        Worst::new(ConstraintId::TrailGap),
        Worst::new(ConstraintId::SpeedMax),
        Worst::new(ConstraintId::SpeedMin),
        Worst::new(ConstraintId::AccelMax),
        Worst::new(ConstraintId::AccelMin),
    ];
    let check_limits = |w: &mut [Worst; 6], t: f64, v: f64, u: f64| {
        w[2].see(t, lim.v_max - v);
        w[3].see(t, v - lim.v_min);
        w[4].see(t, lim.u_max - u);
        w[5].see(t, u - lim.u_min);
    };
    for i in 0..=steps {
        let t = if i == steps {
            plan.t_m
        } else {
            s.t0 + i as f64 * dt
        };
        if i < steps && t >= plan.t_m {
            continue;
        }
        let p = c.eval(t)?;
        check_limits(&mut worst, t, p.v, p.u);
        samples.push(ReplaySample {
            t,
            x: p.x,
            v: p.v,
            u: p.u,
            hdv_positions: (1..=s.hdv_count()).map(|i| hdv_at(i, t)).collect(),
        });
    }
    let ex = c.extrema();
    worst[2].see(ex.v_max.1, lim.v_max - ex.v_max.0);
    worst[3].see(ex.v_min.1, ex.v_min.0 - lim.v_min);
    worst[4].see(ex.u_max.1, lim.u_max - ex.u_max.0);
    worst[5].see(ex.u_min.1, ex.u_min.0 - lim.u_min);

    let end = c.eval(plan.t_m)?;
    let n = s.hdv_count();
    if let Some(lead) = plan.k.leader() {
        worst[0].see(
            plan.t_m,
            hdv_at(lead, plan.t_m) - end.x - (lim.phi_c * end.v + lim.delta),
        );
    }
    if let Some(follow) = plan.k.follower(n) {
        let v_d = s.hdvs[follow - 1].desired_speed;
        worst[1].see(
            plan.t_m,
            end.x - hdv_at(follow, plan.t_m) - (lim.phi_h * v_d + lim.delta),
        );
    }

    Ok(ReplayAudit {
        samples,
        violations: worst.iter().filter_map(Worst::violation).collect(),
    })
}
