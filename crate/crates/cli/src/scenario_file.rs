//! Scenario files: TOML whose keys mirror the [`Scenario`] fields, plus an
//! optional `[solver]` table.

use std::path::Path;

use anyhow::{Context, Result};
use avmerge_core::{BehaviorModel, ConstraintLimits, Hdv, Scenario, SolverOptions, VehicleState};
use serde::{Deserialize, Serialize};

/// Written at the top of every serialized file.
pub const HEADER: &str = "\
# avmerge scenario
# Units: positions and lengths in m, speeds in m/s, accelerations in m/s^2,
# times in s, reaction times phi_c and phi_h in s, beta in 1/m.
# HDVs are listed nearest the merge point first; the merge point sits at l_cz.
";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub t0: f64,
    pub l_cz: f64,
    pub alpha: f64,
    pub av: VehicleState,
    pub hdvs: Vec<Hdv>,
    pub limits: ConstraintLimits,
    pub model: BehaviorModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
}

impl ScenarioFile {
    pub fn new(scenario: Scenario, solver: Option<SolverOptions>) -> Self {
        Self {
            t0: scenario.t0,
            l_cz: scenario.l_cz,
            alpha: scenario.alpha,
            av: scenario.av,
            hdvs: scenario.hdvs,
            limits: scenario.limits,
            model: scenario.model,
            solver,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("cannot parse {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(format!("{HEADER}\n{}", toml::to_string(self)?))
    }

    /// Unvalidated scenario.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            t0: self.t0,
            av: self.av,
            hdvs: self.hdvs.clone(),
            l_cz: self.l_cz,
            alpha: self.alpha,
            limits: self.limits,
            model: self.model,
        }
    }

    pub fn solver(&self) -> SolverOptions {
        self.solver.unwrap_or_default()
    }
}
