//! Seeded random scenarios with a uniform HDV platoon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::safe_sets::MergeRegion;
use crate::types::{BehaviorModel, ConstraintLimits, Hdv, Scenario, VehicleState};

/// Closed ranges sampled uniformly; equal ends pin a value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRanges {
    pub hdv_count: (usize, usize),
    /// HDV spacing (m).
    pub spacing: (f64, f64),
    pub desired_speed: (f64, f64),
    pub av_speed: (f64, f64),
    pub av_position: (f64, f64),
    pub l_cz: (f64, f64),
    /// Time HDV 1 needs to reach the merge point (s).
    pub lead_arrival: (f64, f64),
    pub beta: (f64, f64),
    pub u_bar: (f64, f64),
    pub phi_c: (f64, f64),
    pub phi_h: (f64, f64),
    pub delta: (f64, f64),
    pub v_min: (f64, f64),
    pub v_max: (f64, f64),
    pub u_min: (f64, f64),
    pub u_max: (f64, f64),
    pub alpha: (f64, f64),
}

impl Default for ScenarioRanges {
    fn default() -> Self {
        Self {
            hdv_count: (2, 6),
            spacing: (40.0, 90.0),
            desired_speed: (20.0, 30.0),
            av_speed: (15.0, 30.0),
            av_position: (0.0, 100.0),
            l_cz: (300.0, 500.0),
            lead_arrival: (2.0, 20.0),
            beta: (0.01, 0.2),
            u_bar: (1.0, 5.0),
            phi_c: (0.6, 1.2),
            phi_h: (0.8, 1.5),
            delta: (2.0, 5.0),
            v_min: (0.0, 0.0),
            v_max: (30.0, 35.0),
            u_min: (-7.0, -7.0),
            u_max: (3.3, 3.3),
            alpha: (0.0, 1.0),
        }
    }
}

impl ScenarioRanges {
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self {
            alpha: (alpha, alpha),
            ..self
        }
    }

    fn check(&self) -> Result<()> {
        let pairs = [
            ("spacing", self.spacing),
            ("desired_speed", self.desired_speed),
            ("av_speed", self.av_speed),
            ("av_position", self.av_position),
            ("l_cz", self.l_cz),
            ("lead_arrival", self.lead_arrival),
            ("beta", self.beta),
            ("u_bar", self.u_bar),
            ("phi_c", self.phi_c),
            ("phi_h", self.phi_h),
            ("delta", self.delta),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
            ("u_min", self.u_min),
            ("u_max", self.u_max),
            ("alpha", self.alpha),
        ];
        for (name, (lo, hi)) in pairs {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::ParameterOutOfRange { name, value: lo });
            }
        }
        if self.hdv_count.0 > self.hdv_count.1 {
            return Err(Error::ParameterOutOfRange {
                name: "hdv_count",
                value: self.hdv_count.0 as f64,
            });
        }
        Ok(())
    }
}

pub const MAX_ATTEMPTS: usize = 1000;

fn sample(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn draw(rng: &mut ChaCha8Rng, r: &ScenarioRanges) -> Scenario {
    let n = rng.gen_range(r.hdv_count.0..=r.hdv_count.1);
    let l_cz = sample(rng, r.l_cz);
    let v_d = sample(rng, r.desired_speed);
    let z = sample(rng, r.spacing);
    let lead = l_cz - v_d * sample(rng, r.lead_arrival);
    let hdvs = (0..n)
        .map(|i| Hdv::cruising(lead - i as f64 * z, v_d))
        .collect();
    let limits = ConstraintLimits {
        v_min: sample(rng, r.v_min),
        v_max: sample(rng, r.v_max),
        u_min: sample(rng, r.u_min),
        u_max: sample(rng, r.u_max),
        phi_c: sample(rng, r.phi_c),
        phi_h: sample(rng, r.phi_h),
        delta: sample(rng, r.delta),
    };
    Scenario {
        t0: 0.0,
        av: VehicleState::new(sample(rng, r.av_position), sample(rng, r.av_speed)),
        hdvs,
        l_cz,
        alpha: sample(rng, r.alpha),
        limits,
        model: BehaviorModel {
            u_bar: sample(rng, r.u_bar),
            beta: sample(rng, r.beta),
        },
    }
}

fn acceptable(s: &Scenario) -> bool {
    if s.hdv_count() >= 2 && s.platoon().is_none() {
        return false;
    }
    let Ok(region) = MergeRegion::new(s.last_index(), s) else {
        return false;
    };
    let (lo, hi) = region.v_range;
    (0..=64).any(|i| {
        region
            .time_interval(lo + (hi - lo) * i as f64 / 64.0)
            .is_some()
    })
}

/// Deterministic scenario for `seed`: uniform platoon, valid, and with a
/// reachable slot behind the platoon. Rejected draws are redrawn from the
/// same stream.
pub fn random_scenario(seed: u64, ranges: &ScenarioRanges) -> Result<Scenario> {
    ranges.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let s = draw(&mut rng, ranges);
        if let Ok(s) = s.validate() {
            if acceptable(&s) {
                return Ok(s);
            }
        }
    }
    Err(Error::RetriesExhausted {
        attempts: MAX_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scenario() {
        let r = ScenarioRanges::default();
        assert_eq!(
            random_scenario(7, &r).unwrap(),
            random_scenario(7, &r).unwrap()
        );
        assert_ne!(
            random_scenario(7, &r).unwrap(),
            random_scenario(8, &r).unwrap()
        );
    }

    #[test]
    fn generated_scenarios_are_uniform_platoons() {
        let r = ScenarioRanges::default();
        for seed in 0..200 {
            let s = random_scenario(seed, &r).unwrap();
            assert!(s.clone().validate().is_ok());
            assert!(s.platoon().is_some());
            assert!((2..=6).contains(&s.hdv_count()));
        }
    }

    #[test]
    fn impossible_ranges_exhaust_retries() {
        // AV faster than any allowed speed.
        let r = ScenarioRanges {
            av_speed: (50.0, 60.0),
            ..ScenarioRanges::default()
        };
        assert_eq!(
            random_scenario(1, &r),
            Err(Error::RetriesExhausted {
                attempts: MAX_ATTEMPTS
            })
        );
    }

    #[test]
    fn inverted_range_rejected() {
        let r = ScenarioRanges {
            spacing: (90.0, 40.0),
            ..ScenarioRanges::default()
        };
        assert!(matches!(
            random_scenario(1, &r),
            Err(Error::ParameterOutOfRange {
                name: "spacing",
                ..
            })
        ));
    }
}
