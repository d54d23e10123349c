//! HDV side of the objective: undisrupted travel times plus the extra time and
//! energy HDVs spend yielding to the AV.
//!
//! The HDV directly behind the AV (HDV `k` in sequence `k`) brakes at the
//! constant rate `u_bar` from its desired speed down to the AV's merging speed.
//! HDVs further back feel the same disturbance attenuated by
//! `exp(-beta * z)`, where `z` is their distance to HDV `k` at the merging time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Scenario, SequenceIndex};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HdvCost {
    /// Sum of the HDVs' travel times when nobody yields (s).
    pub undisrupted_time_sum: f64,
    pub time_disruption: f64,
    pub energy_disruption: f64,
}

/// Time HDV `hdv_index` needs to reach the merge point cruising at its desired speed.
pub fn undisrupted_travel_time(hdv_index: usize, scenario: &Scenario) -> Result<f64> {
    let hdv = scenario.hdv(hdv_index)?;
    Ok((scenario.l_cz - hdv.state.position) / hdv.desired_speed)
}

fn check_base(v_d: f64, v_m: f64, u_bar: f64) -> Result<()> {
    if !(v_d > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "v_d",
            value: v_d,
        });
    }
    if !(u_bar > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "u_bar",
            value: u_bar,
        });
    }
    if !(v_m >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "v_m",
            value: v_m,
        });
    }
    Ok(())
}

/// Time lost by an HDV decelerating from `v_d` to `v_m` at rate `u_bar`.
pub fn base_time_disruption(v_d: f64, v_m: f64, u_bar: f64) -> Result<f64> {
    check_base(v_d, v_m, u_bar)?;
    let dv = (v_d - v_m).max(0.0);
    Ok(dv * dv / (2.0 * u_bar * v_d))
}

/// Energy spent by an HDV decelerating from `v_d` to `v_m` at rate `u_bar`.
pub fn base_energy_disruption(v_d: f64, v_m: f64, u_bar: f64) -> Result<f64> {
    check_base(v_d, v_m, u_bar)?;
    Ok(0.5 * u_bar * (v_d - v_m).max(0.0))
}

pub fn discount_factor(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "beta",
            value: beta,
        });
    }
    if !(z >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "z",
            value: z,
        });
    }
    Ok((-beta * z).exp())
}

/// Aggregate HDV cost of sequence `k` when the AV merges at `t_m` with speed `v_m`.
pub fn hdv_cost(k: SequenceIndex, v_m: f64, t_m: f64, scenario: &Scenario) -> Result<HdvCost> {
    if !(t_m > scenario.t0) {
        return Err(Error::TimeBeforeObservation {
            t: t_m,
            t0: scenario.t0,
        });
    }
    let n = scenario.hdv_count();
    let mut cost = HdvCost::default();
    for i in 1..=n {
        cost.undisrupted_time_sum += undisrupted_travel_time(i, scenario)?;
    }
    let Some(kk) = k.follower(n) else {
        return Ok(cost);
    };

    let yielding = scenario.hdv(kk)?;
    let v_d = yielding.desired_speed;
    let u_bar = scenario.model.u_bar;
    let d_t = base_time_disruption(v_d, v_m, u_bar)?;
    let d_e = base_energy_disruption(v_d, v_m, u_bar)?;
    if d_t == 0.0 && d_e == 0.0 {
        return Ok(cost);
    }

    let elapsed = t_m - scenario.t0;
    let x_k = yielding.state.position + elapsed * v_d;
    let mut weight = 1.0;
    for i in kk + 1..=n {
        let h = scenario.hdv(i)?;
        let x_i = h.state.position + elapsed * h.desired_speed;
        // HDVs with different speeds may close the gap entirely; no discount below zero distance.
        weight += discount_factor(scenario.model.beta, (x_k - x_i).max(0.0))?;
    }
    cost.time_disruption = weight * d_t;
    cost.energy_disruption = weight * d_e;
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::fixtures::platoon_scenario;
    use crate::types::Hdv;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn undisrupted_time_examples() {
        let mut s = platoon_scenario();
        s.hdvs = vec![
            Hdv::cruising(400.0, 25.0),
            Hdv::cruising(100.0, 25.0),
            Hdv::cruising(0.0, 20.0),
        ];
        assert_eq!(undisrupted_travel_time(2, &s).unwrap(), 12.0);
        assert_eq!(undisrupted_travel_time(1, &s).unwrap(), 0.0);
        assert_eq!(undisrupted_travel_time(3, &s).unwrap(), 20.0);
        assert!(matches!(
            undisrupted_travel_time(4, &s),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn base_disruption_examples() {
        assert_relative_eq!(
            base_time_disruption(30.0, 20.0, 5.0).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-15
        );
        assert_eq!(base_time_disruption(30.0, 30.0, 5.0).unwrap(), 0.0);
        assert_eq!(base_time_disruption(30.0, 35.0, 5.0).unwrap(), 0.0);
        assert_eq!(base_energy_disruption(30.0, 20.0, 5.0).unwrap(), 25.0);
        assert_eq!(base_energy_disruption(30.0, 31.0, 5.0).unwrap(), 0.0);
        assert_eq!(base_energy_disruption(30.0, 0.0, 2.0).unwrap(), 30.0);
        assert!(matches!(
            base_time_disruption(30.0, 20.0, 0.0),
            Err(Error::NonPositiveParameter { name: "u_bar", .. })
        ));
    }

    #[test]
    fn discount_examples() {
        assert_relative_eq!(
            discount_factor(0.1, 10.0).unwrap(),
            0.36787944117144233,
            max_relative = 1e-15
        );
        assert_eq!(discount_factor(0.1, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            discount_factor(0.05, 40.0).unwrap(),
            0.1353352832366127,
            max_relative = 1e-15
        );
        assert!(discount_factor(1.5, 1.0).is_err());
        assert!(discount_factor(0.1, -1.0).is_err());
    }

    fn two_hdv_scenario() -> Scenario {
        let mut s = platoon_scenario();
        s.hdvs = vec![Hdv::cruising(330.0, 30.0), Hdv::cruising(300.0, 30.0)];
        s
    }

    #[test]
    fn propagated_disruption_example() {
        let s = two_hdv_scenario();
        let k = s.index(1).unwrap();
        let c = hdv_cost(k, 20.0, 1.0, &s).unwrap();
        let expected = (1.0 / 3.0) * (1.0 + (-3.0f64).exp());
        assert_relative_eq!(c.time_disruption, expected, max_relative = 1e-14);
        assert_relative_eq!(
            c.energy_disruption,
            25.0 * (1.0 + (-3.0f64).exp()),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            c.undisrupted_time_sum,
            70.0 / 30.0 + 100.0 / 30.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn last_index_has_no_disruption() {
        let s = platoon_scenario();
        let c = hdv_cost(s.last_index(), 0.0, 3.0, &s).unwrap();
        assert_eq!(c.time_disruption, 0.0);
        assert_eq!(c.energy_disruption, 0.0);
    }

    #[test]
    fn merge_time_must_follow_observation() {
        let s = platoon_scenario();
        assert!(hdv_cost(s.index(1).unwrap(), 10.0, 0.0, &s).is_err());
    }

    proptest! {
        #[test]
        fn disruption_nonincreasing_in_k(v_m in 0.0f64..35.0, dt in 0.1f64..30.0) {
            let s = platoon_scenario();
            let mut prev = (f64::INFINITY, f64::INFINITY);
            for k in s.indices() {
                let c = hdv_cost(k, v_m, dt, &s).unwrap();
                prop_assert!(c.time_disruption >= 0.0 && c.energy_disruption >= 0.0);
                prop_assert!(c.time_disruption <= prev.0 && c.energy_disruption <= prev.1);
                prev = (c.time_disruption, c.energy_disruption);
            }
        }

        #[test]
        fn zero_disruption_iff_av_not_slower(v_m in 0.0f64..35.0) {
            let s = platoon_scenario();
            let all_zero = s.indices().all(|k| {
                let c = hdv_cost(k, v_m, 2.0, &s).unwrap();
                c.time_disruption == 0.0 && c.energy_disruption == 0.0
            });
            prop_assert_eq!(all_zero, v_m >= 25.0);
        }

        #[test]
        fn uniform_platoon_discount_is_geometric(k in 1usize..=3, v_m in 0.0f64..20.0) {
            let s = platoon_scenario();
            let z = s.platoon().unwrap().spacing;
            let gamma = (-s.model.beta * z).exp();
            let c = hdv_cost(s.index(k).unwrap(), v_m, 5.0, &s).unwrap();
            let base = base_time_disruption(25.0, v_m, s.model.u_bar).unwrap();
            let geometric: f64 = (k..=3).map(|i| gamma.powi((i - k) as i32)).sum();
            prop_assert!((c.time_disruption - base * geometric).abs() <= 1e-12 * base.max(1.0));
        }
    }
}
