//! Run configuration: model, contract, switch and numerical settings, loaded
//! from JSON with dotted-path overrides.
//!
//! Every block is optional; missing fields take the values of the reference
//! parameter set (`mu = 0.075`, `sigma = 0`, `a = 0.5`, `c = 9`, `r = 0.1`,
//! `b = ln 5`, a switch that drops the premium and coverage to zero at cost
//! `gamma = -1`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cds::{CdsTerms, SwitchTerms};
use crate::error::{Error, Result};
use crate::levy_model::{JumpDiffusionModel, DEFAULT_ROOT_TOL};
use crate::mc_oracle::PathConfig;
use crate::stopping::DEFAULT_BOUNDARY_TOL;
use crate::verification::GeneratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub mu: f64,
    pub sigma: f64,
    pub jump_rate: f64,
    pub jump_decay: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mu: 0.075,
            sigma: 0.0,
            jump_rate: 0.5,
            jump_decay: 9.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractConfig {
    pub p: f64,
    pub alpha: f64,
    pub b: f64,
    pub r: f64,
}

impl Default for ContractConfig {
    fn default() -> Self {
        Self {
            p: 0.025,
            alpha: 5.0,
            b: 5f64.ln(),
            r: 0.1,
        }
    }
}

/// Terms of the replacement contract and the switching cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchConfig {
    pub p_hat: f64,
    pub alpha_hat: f64,
    pub gamma: f64,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            p_hat: 0.0,
            alpha_hat: 0.0,
            gamma: -1.0,
        }
    }
}

/// Pass thresholds used by the verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Largest allowed `|(L - r) G - r gamma|` on the grid.
    pub generator_flatness: f64,
    pub continuity_gap: f64,
    pub pasting_gap: f64,
    /// Tolerance of the variational inequality check.
    pub variational: f64,
    /// Points this close to `h*` are skipped by the variational check.
    pub kink_exclusion: f64,
    /// Allowed Monte Carlo deviation in standard errors.
    pub mc_z: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            generator_flatness: 1e-3,
            continuity_gap: 1e-10,
            pasting_gap: 1e-8,
            variational: 1e-6,
            kink_exclusion: 1e-3,
            mc_z: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// Interior grid size for generator and value scans.
    pub grid_n: usize,
    pub root_tol: f64,
    pub boundary_tol: f64,
    /// Offset of the perturbed thresholds `h* ± epsilon` in figure data.
    pub epsilon: f64,
    pub generator: GeneratorConfig,
    pub mc: PathConfig,
    pub checks: CheckConfig,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_n: 201,
            root_tol: DEFAULT_ROOT_TOL,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            epsilon: 0.1,
            generator: GeneratorConfig::default(),
            mc: PathConfig::default(),
            checks: CheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub contract: ContractConfig,
    pub switch: SwitchConfig,
    pub numerics: NumericsConfig,
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Applies `key.path=value`. The value is read as JSON when it parses,
    /// otherwise as a string. Only existing keys can be set.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{assignment}` is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_err("override key is empty"));
        }
        let raw = raw.trim();
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

        let mut doc = serde_json::to_value(*self).map_err(config_err)?;
        let mut slot = &mut doc;
        for part in key.split('.') {
            let obj = slot
                .as_object_mut()
                .ok_or_else(|| config_err(format!("`{key}`: `{part}` is below a scalar setting")))?;
            let known: Vec<String> = obj.keys().cloned().collect();
            slot = obj.get_mut(part).ok_or_else(|| {
                config_err(format!(
                    "unknown setting `{key}` (`{part}` not in: {})",
                    known.join(", ")
                ))
            })?;
        }
        *slot = value;
        let updated: Self = serde_json::from_value(doc)
            .map_err(|e| config_err(format!("override `{key}`: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    /// Enforces the model, contract, switch and numerical constraints.
    pub fn validate(&self) -> Result<()> {
        self.model()?;
        let terms = self.cds_terms()?;
        self.switch_terms_for(&terms)?;
        let n = &self.numerics;
        if n.grid_n < 2 {
            return Err(config_err(format!("numerics.grid_n must be >= 2, got {}", n.grid_n)));
        }
        for (name, v) in [
            ("numerics.root_tol", n.root_tol),
            ("numerics.boundary_tol", n.boundary_tol),
            ("numerics.epsilon", n.epsilon),
            ("numerics.checks.generator_flatness", n.checks.generator_flatness),
            ("numerics.checks.continuity_gap", n.checks.continuity_gap),
            ("numerics.checks.pasting_gap", n.checks.pasting_gap),
            ("numerics.checks.variational", n.checks.variational),
            ("numerics.checks.mc_z", n.checks.mc_z),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(n.checks.kink_exclusion >= 0.0 && n.checks.kink_exclusion.is_finite()) {
            return Err(config_err(format!(
                "numerics.checks.kink_exclusion must be >= 0, got {}",
                n.checks.kink_exclusion
            )));
        }
        n.generator.validate()?;
        n.mc.validate()?;
        Ok(())
    }

    pub fn model(&self) -> Result<JumpDiffusionModel> {
        let m = &self.model;
        JumpDiffusionModel::new(m.mu, m.sigma, m.jump_rate, m.jump_decay)
    }

    pub fn cds_terms(&self) -> Result<CdsTerms> {
        let c = &self.contract;
        CdsTerms::new(c.p, c.alpha, c.b, c.r)
    }

    pub fn switch_terms(&self) -> Result<SwitchTerms> {
        self.switch_terms_for(&self.cds_terms()?)
    }

    fn switch_terms_for(&self, terms: &CdsTerms) -> Result<SwitchTerms> {
        let s = &self.switch;
        SwitchTerms::from_contracts(terms, s.p_hat, s.alpha_hat, s.gamma)
    }

    /// Copy with a different diffusion coefficient.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        let mut cfg = *self;
        cfg.model.sigma = sigma;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_set() {
        let cfg = RunConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let sw = cfg.switch_terms().unwrap();
        assert_eq!((sw.p_tilde, sw.alpha_tilde, sw.gamma), (-0.025, -5.0, -1.0));
        assert_eq!(cfg.contract.b, 5f64.ln());
    }

    #[test]
    fn partial_block_keeps_other_defaults() {
        let cfg = RunConfig::from_json_str(r#"{"model": {"sigma": 0.2}}"#).unwrap();
        assert_eq!(cfg.model.sigma, 0.2);
        assert_eq!(cfg.model.mu, 0.075);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = RunConfig::from_json_str(r#"{"model": {"sigmaa": 0.2}}"#).unwrap_err();
        assert!(err.to_string().contains("sigmaa"), "{err}");
    }

    #[test]
    fn negative_sigma_names_constraint() {
        let err = RunConfig::from_json_str(r#"{"model": {"sigma": -0.1}}"#).unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("model.sigma=0.2").unwrap();
        cfg.apply_override("numerics.mc.n_paths = 1000").unwrap();
        cfg.apply_override("numerics.mc.horizon=50").unwrap();
        assert_eq!(cfg.model.sigma, 0.2);
        assert_eq!(cfg.numerics.mc.n_paths, 1000);
        assert_eq!(cfg.numerics.mc.horizon, Some(50.0));
        cfg.apply_override("numerics.mc.horizon=null").unwrap();
        assert_eq!(cfg.numerics.mc.horizon, None);

        let before = cfg;
        assert!(cfg.apply_override("model.nope=1").is_err());
        assert!(cfg.apply_override("model.sigma").is_err());
        assert!(cfg.apply_override("model.sigma=abc").is_err());
        assert!(cfg.apply_override("model.sigma.x=1").is_err());
        assert!(cfg.apply_override("switch.gamma=0.5").is_err());
        assert_eq!(cfg, before);
    }

    #[test]
    fn serializes_back_to_same_config() {
        let cfg = RunConfig::default().with_sigma(0.2);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json_str(&text).unwrap(), cfg);
    }
}
