use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Representation used by a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Axisym,
    Mesh,
}

/// Flow parameters. Field names follow the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FlowConfig {
    pub sigma_target: f64,
    /// First trial step of each line search (L-BFGS steps are scaled so 1 is natural).
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub armijo: f64,
    pub max_iterations: usize,
    /// Relative constrained-gradient norm at which a flow counts as converged.
    pub tolerance: f64,
    /// Accepted |sigma - target| after projection.
    pub constraint_tolerance: f64,
    /// Remesh when the longest/shortest edge ratio exceeds this.
    pub edge_ratio: f64,
    /// Remesh when the worst triangle aspect ratio exceeds this.
    pub aspect_ratio: f64,
    /// Rescale to unit area after every step.
    pub normalize_area: bool,
    /// Quasi-Newton memory.
    pub memory: usize,
    /// Step of the conformal grid for profiles.
    pub grid_step: f64,
    /// Length of the pole tails of the conformal grid, in log t.
    pub tail_length: f64,
    /// Icosphere level for mesh seeds.
    pub mesh_level: usize,
    pub representation: Representation,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            sigma_target: 0.85,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            max_backtracks: 50,
            armijo: 1e-4,
            max_iterations: 10000,
            tolerance: 1e-5,
            constraint_tolerance: 1e-10,
            edge_ratio: 12.0,
            aspect_ratio: 6.0,
            normalize_area: true,
            memory: 12,
            grid_step: 0.02,
            tail_length: 9.0,
            mesh_level: 3,
            representation: Representation::Axisym,
            seed: 0,
        }
    }
}

impl FlowConfig {
    pub fn new(sigma_target: f64) -> Result<Self> {
        let c = FlowConfig {
            sigma_target,
            ..FlowConfig::default()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.sigma_target > 0.0 && self.sigma_target < 1.0) {
            return bad(format!("sigmaTarget must lie in (0,1), got {}", self.sigma_target));
        }
        if !(self.tolerance > 0.0 && self.constraint_tolerance > 0.0 && self.armijo > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.initial_step > 0.0) {
            return bad("initialStep must be positive".into());
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrackFactor must lie in (0,1)".into());
        }
        if !(self.grid_step > 0.0 && self.grid_step < 0.5 && self.tail_length >= 3.0) {
            return bad("gridStep must lie in (0,0.5) and tailLength be at least 3".into());
        }
        if !(self.edge_ratio > 1.0 && self.aspect_ratio > 1.0) {
            return bad("remesh thresholds must exceed 1".into());
        }
        if self.memory == 0 {
            return bad("memory must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stalled,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "maxIterations",
            Termination::Stalled => "stalled",
        }
    }
}

/// One accepted step. `segment` increases whenever the discretization is
/// rebuilt (remesh or regrid); W is monotone within a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryRow {
    pub iteration: usize,
    pub willmore: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub step_size: f64,
    pub residual: f64,
    pub segment: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_bounds() {
        assert!(FlowConfig::new(1.0).is_err());
        assert!(FlowConfig::new(0.0).is_err());
        assert!(FlowConfig::new(0.5).is_ok());
    }

    #[test]
    fn json_defaults_fill_in() {
        let c: FlowConfig = serde_json::from_str(r#"{"sigmaTarget": 0.3, "maxIterations": 7}"#).unwrap();
        assert_eq!(c.max_iterations, 7);
        assert_eq!(c.memory, FlowConfig::default().memory);
        c.validate().unwrap();
    }
}
