//! JSON run configuration. Unknown keys are rejected everywhere so typos
//! fail loudly instead of silently falling back to defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use carma_hawkes::{
    esscher_transform, solve_theta_star, CarmaHawkesParams, JumpSpec, Measure, RiskNeutralModel,
};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mu: f64,
    /// Autoregressive coefficients a₁..a_p.
    pub a: Vec<f64>,
    /// Moving-average coefficients b₀..b_q.
    pub b: Vec<f64>,
    pub jump: JumpConfig,
    /// Measure the jump law is quoted under; "p" runs the tilt first.
    #[serde(default = "default_measure")]
    pub measure: String,
    /// Risk premium, required when `measure` is "p".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    pub sigma: f64,
    pub rate: f64,
    pub spot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub t0: f64,
}

fn default_measure() -> String {
    "q".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    Normal { mean: f64, std: f64 },
    ShiftedGamma { shape: f64, rate: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub quadrature_order: usize,
    pub ode_steps: usize,
    pub mc_paths: usize,
    pub seed: u64,
    pub pmf_max_count: usize,
    pub pmf_grid: usize,
    pub series_epsilon: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            quadrature_order: 450,
            ode_steps: 2000,
            mc_paths: 1_000_000,
            seed: 1,
            pmf_max_count: 128,
            pmf_grid: 512,
            series_epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Box bounds over Ψ = [μ, b₀.., a₁.., μ_J, σ_J, σ]; empty means the
    /// built-in defaults for the family.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub max_evaluations: usize,
    pub restarts: usize,
    pub tolerance: f64,
    /// Quotes with volume or open interest below this are dropped.
    pub min_activity: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
            max_evaluations: 4000,
            restarts: 3,
            tolerance: 1e-8,
            min_activity: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Builds the validated pricing model, running the measure change when
    /// the jump law is quoted under the physical measure.
    pub fn build_model(&self) -> Result<RiskNeutralModel, CliError> {
        let m = &self.model;
        let params = CarmaHawkesParams::new(m.mu, m.a.clone(), m.b.clone())?;
        let jump_q = match m.measure.as_str() {
            "q" => self.jump_spec(Measure::Q)?,
            "p" => {
                let phi = m.phi.ok_or_else(|| {
                    CliError::usage("measure \"p\" requires the risk premium field \"phi\"")
                })?;
                let spec_p = self.jump_spec(Measure::P)?;
                let sol = solve_theta_star(&spec_p, phi)?;
                esscher_transform(&spec_p, sol.theta_star)?
            }
            other => {
                return Err(CliError::usage(format!(
                    "measure must be \"p\" or \"q\", got {other:?}"
                )))
            }
        };
        let x0 = m.x0.clone().unwrap_or_else(|| vec![0.0; params.p()]);
        Ok(RiskNeutralModel::with_state(
            params, jump_q, m.sigma, m.rate, m.spot, x0, m.t0,
        )?)
    }

    fn jump_spec(&self, measure: Measure) -> Result<JumpSpec, CliError> {
        Ok(match self.model.jump {
            JumpConfig::Normal { mean, std } => JumpSpec::normal(mean, std, measure)?,
            JumpConfig::ShiftedGamma { shape, rate } => {
                JumpSpec::shifted_gamma(shape, rate, measure)?
            }
        })
    }
}
