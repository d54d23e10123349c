//! Minimum-energy AV trajectory between fixed boundary states.
//!
//! With `u = a0 t + b0` the state is a cubic in time; the four coefficients
//! are pinned by position and speed at both ends. Everything here is closed
//! form: the coefficient solve, the energy integral, the speed and
//! acceleration extrema, and the range of horizons for which the speed stays
//! within limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ConstraintLimits;

/// Horizons shorter than this are rejected.
pub const MIN_HORIZON: f64 = 1e-9;

/// Slack on limit checks, absorbing rounding on trajectories built to touch a limit.
pub const LIMIT_TOL: f64 = 1e-9;

/// Polynomial coefficients in absolute time, valid on `[valid_from, valid_to]`.
///
/// `u(t) = a0 t + b0`, `v(t) = a0 t^2 / 2 + b0 t + c0`,
/// `x(t) = a0 t^3 / 6 + b0 t^2 / 2 + c0 t + d0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCoefficients {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: f64,
    pub valid_from: f64,
    pub valid_to: f64,
    /// Taylor coefficients at `valid_from` (jerk, accel, speed, position);
    /// evaluation uses these to avoid cancellation at large absolute times.
    #[serde(skip)]
    local: [f64; 4],
}

/// Boundary data of one fixed-endpoint problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryValue {
    pub x0: f64,
    pub v0: f64,
    pub t0: f64,
    pub l: f64,
    pub v_m: f64,
    pub t_m: f64,
}

impl BoundaryValue {
    pub fn horizon(&self) -> f64 {
        self.t_m - self.t0
    }

    pub fn solve(&self) -> Result<TrajectoryCoefficients> {
        solve_coefficients(self.x0, self.v0, self.t0, self.l, self.v_m, self.t_m)
    }

    pub fn energy(&self) -> Result<f64> {
        energy_closed_form(self.x0, self.v0, self.t0, self.l, self.v_m, self.t_m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub u: f64,
    pub v: f64,
    pub x: f64,
}

fn check_horizon(t0: f64, t_m: f64) -> Result<f64> {
    let horizon = t_m - t0;
    if !(horizon >= MIN_HORIZON) {
        return Err(Error::DegenerateHorizon { horizon });
    }
    Ok(horizon)
}

/// Solves the four boundary conditions in closed form.
pub fn solve_coefficients(
    x0: f64,
    v0: f64,
    t0: f64,
    l: f64,
    v_m: f64,
    t_m: f64,
) -> Result<TrajectoryCoefficients> {
    let h = check_horizon(t0, t_m)?;
    // Shifted time: x(s) = x0 + v0 s + b s^2/2 + a s^3/6 with s = t - t0.
    let dx = l - x0 - v0 * h;
    let dv = v_m - v0;
    let a = (6.0 * h * dv - 12.0 * dx) / (h * h * h);
    let b = dv / h - 0.5 * a * h;
    Ok(TrajectoryCoefficients::from_local(a, b, v0, x0, t0, t_m))
}

impl TrajectoryCoefficients {
    fn from_local(a: f64, b: f64, v: f64, x: f64, from: f64, to: f64) -> Self {
        let t = from;
        Self {
            a0: a,
            b0: b - a * t,
            c0: v - b * t + 0.5 * a * t * t,
            d0: x - v * t + 0.5 * b * t * t - a * t * t * t / 6.0,
            valid_from: from,
            valid_to: to,
            local: [a, b, v, x],
        }
    }

    /// Builds coefficients from their absolute-time form.
    pub fn from_absolute(
        a0: f64,
        b0: f64,
        c0: f64,
        d0: f64,
        valid_from: f64,
        valid_to: f64,
    ) -> Self {
        let t = valid_from;
        let u = a0 * t + b0;
        let v = 0.5 * a0 * t * t + b0 * t + c0;
        let x = a0 * t * t * t / 6.0 + 0.5 * b0 * t * t + c0 * t + d0;
        Self {
            a0,
            b0,
            c0,
            d0,
            valid_from,
            valid_to,
            local: [a0, u, v, x],
        }
    }

    pub fn horizon(&self) -> f64 {
        self.valid_to - self.valid_from
    }

    fn eval_unchecked(&self, t: f64) -> StateSample {
        let [a, b, v, x] = self.local;
        let s = t - self.valid_from;
        StateSample {
            u: a * s + b,
            v: v + s * (b + s * a / 2.0),
            x: x + s * (v + s * (b / 2.0 + s * a / 6.0)),
        }
    }

    /// Control, speed and position at `t`.
    pub fn eval(&self, t: f64) -> Result<StateSample> {
        if !(t >= self.valid_from && t <= self.valid_to) {
            return Err(Error::OutOfDomain {
                t,
                from: self.valid_from,
                to: self.valid_to,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    /// Extreme values of `u` and `v` over the domain, with the times they occur.
    pub fn extrema(&self) -> Extrema {
        let start = self.eval_unchecked(self.valid_from);
        let end = self.eval_unchecked(self.valid_to);
        let mut ex = Extrema {
            u_min: (
                start.u.min(end.u),
                if start.u <= end.u {
                    self.valid_from
                } else {
                    self.valid_to
                },
            ),
            u_max: (
                start.u.max(end.u),
                if start.u >= end.u {
                    self.valid_from
                } else {
                    self.valid_to
                },
            ),
            v_min: (start.v, self.valid_from),
            v_max: (start.v, self.valid_from),
        };
        let mut visit = |t: f64, v: f64| {
            if v < ex.v_min.0 {
                ex.v_min = (v, t);
            }
            if v > ex.v_max.0 {
                ex.v_max = (v, t);
            }
        };
        visit(self.valid_to, end.v);
        let [a, b, ..] = self.local;
        if a != 0.0 {
            let t = self.valid_from - b / a;
            if t > self.valid_from && t < self.valid_to {
                visit(t, self.eval_unchecked(t).v);
            }
        }
        ex
    }
}

/// `(value, time)` pairs of the extreme control and speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrema {
    pub u_min: (f64, f64),
    pub u_max: (f64, f64),
    pub v_min: (f64, f64),
    pub v_max: (f64, f64),
}

/// `A1 T^2 + A2 T + A3` over `T^3`: the energy as a rational function of the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRational {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl EnergyRational {
    pub fn new(distance: f64, v0: f64, v_m: f64) -> Self {
        Self {
            a1: 2.0 * (v0 * v0 + v0 * v_m + v_m * v_m),
            a2: -6.0 * distance * (v0 + v_m),
            a3: 6.0 * distance * distance,
        }
    }

    pub fn eval(&self, horizon: f64) -> f64 {
        let t = horizon;
        (self.a1 * t * t + self.a2 * t + self.a3) / (t * t * t)
    }

    /// Largest horizon below which the energy strictly decreases as the horizon grows.
    pub fn decreasing_threshold(&self) -> f64 {
        let disc = (self.a2 * self.a2 - 3.0 * self.a1 * self.a3).max(0.0);
        (-self.a2 - disc.sqrt()) / self.a1
    }
}

/// Closed-form horizon below which the energy is monotonically decreasing,
/// `3 D / (v0 + v_m + sqrt(v0 v_m))`.
pub fn decreasing_threshold(distance: f64, v0: f64, v_m: f64) -> f64 {
    3.0 * distance / (v0 + v_m + (v0 * v_m).sqrt())
}

/// Control effort `∫ u^2 / 2 dt` of the minimum-energy trajectory, in closed form.
///
/// Written in the deviations of the boundary speeds from the average speed,
/// `2 (a^2 + a b + b^2) / T`, which is nonnegative and free of the
/// cancellation in the expanded rational form.
pub fn energy_closed_form(x0: f64, v0: f64, t0: f64, l: f64, v_m: f64, t_m: f64) -> Result<f64> {
    let h = check_horizon(t0, t_m)?;
    let mean = (l - x0) / h;
    let (a, b) = (v0 - mean, v_m - mean);
    Ok(2.0 * (a * a + a * b + b * b) / h)
}

/// Three-point Gauss-Legendre integral of `u^2 / 2`; exact for the quadratic integrand.
pub fn energy_quadrature(coeffs: &TrajectoryCoefficients) -> f64 {
    const NODES: [(f64, f64); 3] = [
        (-0.774_596_669_241_483_4, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774_596_669_241_483_4, 5.0 / 9.0),
    ];
    let half = 0.5 * coeffs.horizon();
    let mid = coeffs.valid_from + half;
    NODES
        .iter()
        .map(|&(node, weight)| {
            let u = coeffs.eval_unchecked(mid + half * node).u;
            weight * 0.5 * u * u
        })
        .sum::<f64>()
        * half
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub speed_ok: bool,
    pub accel_ok: bool,
    pub v_range: (f64, f64),
    pub u_range: (f64, f64),
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.speed_ok && self.accel_ok
    }
}

/// Checks speed and acceleration limits using the exact polynomial extrema.
pub fn feasibility(
    coeffs: &TrajectoryCoefficients,
    limits: &ConstraintLimits,
) -> FeasibilityReport {
    let ex = coeffs.extrema();
    let v_range = (ex.v_min.0, ex.v_max.0);
    let u_range = (ex.u_min.0, ex.u_max.0);
    FeasibilityReport {
        speed_ok: v_range.0 >= limits.v_min - LIMIT_TOL && v_range.1 <= limits.v_max + LIMIT_TOL,
        accel_ok: u_range.0 >= limits.u_min - LIMIT_TOL && u_range.1 <= limits.u_max + LIMIT_TOL,
        v_range,
        u_range,
    }
}

/// Horizons `[T_min, T_max]` for which the trajectory covering `distance`
/// from speed `v0` to `v_m` keeps its speed within `[v_min, v_max]`.
/// `T_max` is infinite when arbitrarily slow trajectories stay admissible.
///
/// In normalized time `s = (t - t0) / T` the speed is
/// `v(s) = P(s) + 6 w s (1 - s)` with mean speed `w = distance / T`, so each
/// speed limit bounds `w` from one side. Minimizing the bound over `s` gives
/// `w <= (v_max + v0 + v_m + sqrt((v_max - v0)(v_max - v_m))) / 3` and
/// `w >= (v_min + v0 + v_m - sqrt((v0 - v_min)(v_m - v_min))) / 3`.
pub fn speed_feasible_horizon(
    distance: f64,
    v0: f64,
    v_m: f64,
    limits: &ConstraintLimits,
) -> Option<(f64, f64)> {
    let (lo, hi) = (limits.v_min, limits.v_max);
    if !(distance > 0.0) || v0 < lo || v0 > hi || v_m < lo || v_m > hi {
        return None;
    }
    let w_hi = (hi + v0 + v_m + ((hi - v0) * (hi - v_m)).sqrt()) / 3.0;
    let w_lo = (lo + v0 + v_m - ((v0 - lo) * (v_m - lo)).sqrt()) / 3.0;
    if w_hi <= 0.0 || w_lo > w_hi {
        return None;
    }
    let t_min = distance / w_hi;
    let t_max = if w_lo > 0.0 {
        distance / w_lo
    } else {
        f64::INFINITY
    };
    Some((t_min, t_max))
}
