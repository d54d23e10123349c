//! Domain types shared by every solver stage: vehicle states, the scenario
//! observed by the autonomous vehicle (AV), actuator limits and the HDV
//! behavior model.
//!
//! All quantities are SI. Times are absolute seconds; the observation instant
//! `t0` is carried explicitly instead of being normalized to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a platoon is uniform.
pub const PLATOON_REL_TOL: f64 = 1e-9;

/// Position along a lane (m) and speed (m/s) at the observation instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: f64,
    pub velocity: f64,
}

impl VehicleState {
    pub fn new(position: f64, velocity: f64) -> Self {
        Self { position, velocity }
    }
}

/// A human-driven vehicle: its observed state and the speed it cruises at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hdv {
    pub state: VehicleState,
    pub desired_speed: f64,
}

impl Hdv {
    /// An HDV already cruising at its desired speed.
    pub fn cruising(position: f64, speed: f64) -> Self {
        Self {
            state: VehicleState::new(position, speed),
            desired_speed: speed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// AV reaction time (s).
    pub phi_c: f64,
    /// HDV reaction time (s).
    pub phi_h: f64,
    /// Standstill gap (m).
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehaviorModel {
    /// Magnitude of the constant HDV deceleration used by the disruption model.
    pub u_bar: f64,
    /// Distance discount rate of the disruption propagation.
    pub beta: f64,
}

/// 1-based position of the AV in the crossing order: `k = 1` crosses ahead of
/// every HDV, `k = N + 1` crosses behind all of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequenceIndex(usize);

impl SequenceIndex {
    pub fn new(k: usize, hdv_count: usize) -> Result<Self> {
        if k == 0 || k > hdv_count + 1 {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: hdv_count + 1,
            });
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// The HDV crossing directly ahead of the AV, if any.
    pub fn leader(self) -> Option<usize> {
        (self.0 > 1).then(|| self.0 - 1)
    }

    /// The HDV yielding directly behind the AV, if any.
    pub fn follower(self, hdv_count: usize) -> Option<usize> {
        (self.0 <= hdv_count).then_some(self.0)
    }

    pub fn is_last(self, hdv_count: usize) -> bool {
        self.0 == hdv_count + 1
    }
}

impl std::fmt::Display for SequenceIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Uniform platoon parameters: common desired speed and common spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Platoon {
    pub speed: f64,
    pub spacing: f64,
}

/// Everything the AV observes at `t0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub t0: f64,
    pub av: VehicleState,
    /// Ordered by position, descending: `hdvs[0]` is HDV 1, nearest the merge point.
    pub hdvs: Vec<Hdv>,
    /// Control-zone length; the merge point sits at this coordinate.
    pub l_cz: f64,
    pub alpha: f64,
    pub limits: ConstraintLimits,
    pub model: BehaviorModel,
}

impl Scenario {
    pub fn hdv_count(&self) -> usize {
        self.hdvs.len()
    }

    /// HDV by its 1-based index.
    pub fn hdv(&self, index: usize) -> Result<&Hdv> {
        if index == 0 || index > self.hdvs.len() {
            return Err(Error::IndexOutOfRange {
                index,
                max: self.hdvs.len(),
            });
        }
        Ok(&self.hdvs[index - 1])
    }

    pub fn index(&self, k: usize) -> Result<SequenceIndex> {
        SequenceIndex::new(k, self.hdv_count())
    }

    /// All sequence indices `1..=N+1`.
    pub fn indices(&self) -> impl Iterator<Item = SequenceIndex> {
        (1..=self.hdv_count() + 1).map(SequenceIndex)
    }

    pub fn last_index(&self) -> SequenceIndex {
        SequenceIndex(self.hdv_count() + 1)
    }

    /// Distance from the AV to the merge point.
    pub fn av_distance(&self) -> f64 {
        self.l_cz - self.av.position
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    /// Checks every invariant and returns the scenario unchanged.
    pub fn validate(self) -> Result<Self> {
        validate_scenario(&self)?;
        Ok(self)
    }

    /// Uniform platoon parameters when all HDVs share one desired speed and
    /// one spacing (within [`PLATOON_REL_TOL`]). Needs at least two HDVs.
    pub fn platoon(&self) -> Option<Platoon> {
        if self.hdvs.len() < 2 {
            return None;
        }
        let speed = self.hdvs[0].desired_speed;
        let spacing = self.hdvs[0].state.position - self.hdvs[1].state.position;
        let speeds_equal = self
            .hdvs
            .iter()
            .all(|h| (h.desired_speed - speed).abs() <= PLATOON_REL_TOL * speed.abs());
        let spacing_equal = self.hdvs.windows(2).all(|w| {
            let z = w[0].state.position - w[1].state.position;
            (z - spacing).abs() <= PLATOON_REL_TOL * spacing.abs()
        });
        (speeds_equal && spacing_equal).then_some(Platoon { speed, spacing })
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { name, value })
    }
}

/// Checks all scenario invariants.
pub fn validate_scenario(s: &Scenario) -> Result<()> {
    finite("t0", s.t0)?;
    finite("l_cz", s.l_cz)?;
    if !(0.0..=1.0).contains(&s.alpha) {
        return Err(Error::AlphaOutOfRange(s.alpha));
    }

    let lim = &s.limits;
    finite("v_min", lim.v_min)?;
    finite("v_max", lim.v_max)?;
    if lim.v_min < 0.0 || lim.v_min >= lim.v_max {
        return Err(Error::InvalidLimits("need 0 <= v_min < v_max"));
    }
    if !(lim.u_min < 0.0 && lim.u_max > 0.0) {
        return Err(Error::InvalidLimits("need u_min < 0 < u_max"));
    }
    positive("phi_c", lim.phi_c)?;
    positive("phi_h", lim.phi_h)?;
    positive("delta", lim.delta)?;

    positive("u_bar", s.model.u_bar)?;
    if !(s.model.beta > 0.0 && s.model.beta < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "beta",
            value: s.model.beta,
        });
    }

    let av = &s.av;
    finite("av.position", av.position)?;
    if av.position >= s.l_cz {
        return Err(Error::PastMergePoint { vehicle: 0 });
    }
    if av.velocity < lim.v_min || av.velocity > lim.v_max {
        return Err(Error::ParameterOutOfRange {
            name: "av.velocity",
            value: av.velocity,
        });
    }

    for (i, h) in s.hdvs.iter().enumerate() {
        let index = i + 1;
        finite("hdv.position", h.state.position)?;
        positive("hdv.desired_speed", h.desired_speed)?;
        if h.state.velocity < 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "hdv.velocity",
                value: h.state.velocity,
            });
        }
        if h.state.velocity != h.desired_speed {
            return Err(Error::SpeedMismatch {
                index,
                velocity: h.state.velocity,
                desired: h.desired_speed,
            });
        }
        if h.state.position > s.l_cz {
            return Err(Error::PastMergePoint { vehicle: index });
        }
    }
    if let Some(i) = s
        .hdvs
        .windows(2)
        .position(|w| w[0].state.position <= w[1].state.position)
    {
        return Err(Error::UnorderedHdvs { index: i + 2 });
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_spacing_is_valid_and_uniform() {
        let s = platoon_scenario().validate().unwrap();
        let p = s.platoon().unwrap();
        assert_eq!(p.spacing, 50.0);
        assert_eq!(p.speed, 25.0);
    }

    #[test]
    fn unordered_hdvs_rejected() {
        let mut s = platoon_scenario();
        s.hdvs = vec![Hdv::cruising(250.0, 25.0), Hdv::cruising(300.0, 25.0)];
        assert!(matches!(
            s.validate(),
            Err(Error::UnorderedHdvs { index: 2 })
        ));
    }

    #[test]
    fn speed_mismatch_rejected() {
        let mut s = platoon_scenario();
        s.hdvs[0].state.velocity = 24.0;
        assert!(matches!(
            s.validate(),
            Err(Error::SpeedMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn alpha_and_parameters_checked() {
        let mut s = platoon_scenario();
        s.alpha = 1.5;
        assert!(matches!(s.validate(), Err(Error::AlphaOutOfRange(_))));

        let mut s = platoon_scenario();
        s.limits.delta = 0.0;
        assert!(matches!(
            s.validate(),
            Err(Error::NonPositiveParameter { name: "delta", .. })
        ));

        let mut s = platoon_scenario();
        s.model.beta = 1.0;
        assert!(matches!(
            s.validate(),
            Err(Error::ParameterOutOfRange { name: "beta", .. })
        ));
    }

    #[test]
    fn uneven_spacing_is_not_uniform() {
        let mut s = platoon_scenario();
        s.hdvs[2].state.position = 199.0;
        assert!(s.clone().validate().is_ok());
        assert!(s.platoon().is_none());
    }

    #[test]
    fn sequence_index_neighbors() {
        let k = SequenceIndex::new(1, 3).unwrap();
        assert_eq!(k.leader(), None);
        assert_eq!(k.follower(3), Some(1));
        let k = SequenceIndex::new(4, 3).unwrap();
        assert_eq!(k.leader(), Some(3));
        assert_eq!(k.follower(3), None);
        assert!(SequenceIndex::new(5, 3).is_err());
        assert!(SequenceIndex::new(0, 3).is_err());
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(alpha in 0.0f64..=1.0, x0 in -100.0f64..350.0) {
            let mut s = platoon_scenario();
            s.alpha = alpha;
            s.av.position = x0;
            let once = s.clone().validate().unwrap();
            let twice = once.clone().validate().unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn platoon_detection_translation_invariant(
            shift in -1000.0f64..0.0,
            spacing in 5.0f64..80.0,
            n in 3usize..7,
            bump in prop::bool::ANY,
        ) {
            let mut s = platoon_scenario();
            s.hdvs = (0..n).map(|i| Hdv::cruising(390.0 - i as f64 * spacing, 25.0)).collect();
            if bump {
                s.hdvs[n - 1].state.position -= 0.5;
            }
            let before = s.platoon().is_some();
            let mut moved = s.clone();
            for h in &mut moved.hdvs {
                h.state.position += shift;
            }
            prop_assert_eq!(before, moved.platoon().is_some());
            prop_assert_eq!(before, !bump);
        }
    }
}
