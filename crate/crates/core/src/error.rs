use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("HDV {index} is not strictly behind HDV {}", index - 1)]
    UnorderedHdvs { index: usize },
    #[error("HDV {index} travels at {velocity} m/s but its desired speed is {desired} m/s")]
    SpeedMismatch {
        index: usize,
        velocity: f64,
        desired: f64,
    },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("parameter `{name}` out of range: {value}")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("invalid constraint limits: {0}")]
    InvalidLimits(&'static str),
    #[error("vehicle {vehicle} is already past the merge point (0 = AV)")]
    PastMergePoint { vehicle: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("time {t} precedes the observation instant {t0}")]
    TimeBeforeObservation { t: f64, t0: f64 },
    #[error("sequence index {k} has an empty safe window")]
    EmptyWindow { k: usize },
    #[error("horizon {horizon} s is too short to define a trajectory")]
    DegenerateHorizon { horizon: f64 },
    #[error("time {t} outside trajectory domain [{from}, {to}]")]
    OutOfDomain { t: f64, from: f64, to: f64 },
    #[error("merging point (t = {t_m}, v = {v_m}) lies outside the safe window of index {k}")]
    UnsafePoint { k: usize, t_m: f64, v_m: f64 },
    #[error("no admissible merging plan exists, not even behind all HDVs")]
    NoFeasiblePlan,
    #[error("uniform-platoon assumption violated: {0}")]
    AssumptionViolated(&'static str),
    #[error("sequence index {k} admits no merging point; the closed-form index rules need every index admissible")]
    InadmissibleIndex { k: usize },
    #[error("scenario generator gave up after {attempts} attempts")]
    RetriesExhausted { attempts: usize },
}
