//! Surface-family configuration.

use serde::{Deserialize, Serialize};

use cmc_rigidity::spectral::{MAX_BAND_LIMIT, MIN_BAND_LIMIT};
use cmc_rigidity::{Error, Result};

/// Largest admissible `Σ|amp|·|t|`.
pub const AMPLITUDE_BUDGET: f64 = 0.1;

/// One term `amp · Y_{l,m}` of the radius function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub l: usize,
    pub m: i64,
    pub amp: f64,
}

/// Rigid motion and Möbius warp applied to the parametrization before gauge fixing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreWarp {
    #[serde(default)]
    pub v: [f64; 3],
    /// Axis-angle vector.
    #[serde(default)]
    pub rotation: [f64; 3],
    #[serde(default)]
    pub translation: [f64; 3],
}

/// A family `ρ_t = 1 + t Σ amp · Y_{l,m}` and how to process it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub band_limit: usize,
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub pre_warp: Option<PreWarp>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    0.25
}

impl FamilyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Configuration(e.to_string()))
    }

    /// Check everything except the amplitude list.
    pub fn validate(&self) -> Result<()> {
        let l_max = self.band_limit;
        if !(MIN_BAND_LIMIT..=MAX_BAND_LIMIT).contains(&l_max) {
            return Err(Error::Configuration(format!(
                "band_limit {l_max} outside [{MIN_BAND_LIMIT}, {MAX_BAND_LIMIT}]"
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::Configuration("no modes given".into()));
        }
        for mode in &self.modes {
            if mode.l < 2 || mode.l + 2 > l_max {
                return Err(Error::Configuration(format!(
                    "mode l = {} outside [2, {}]",
                    mode.l,
                    l_max - 2
                )));
            }
            if mode.m.unsigned_abs() as usize > mode.l {
                return Err(Error::Configuration(format!("mode m = {} exceeds l = {}", mode.m, mode.l)));
            }
            if !mode.amp.is_finite() {
                return Err(Error::Configuration("mode amplitude is not finite".into()));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Configuration(format!("alpha {} outside (0, 1/2)", self.alpha)));
        }
        if let Some(w) = &self.pre_warp {
            let v = w.v;
            if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() >= 1.0 {
                return Err(Error::Configuration("pre_warp |v| must be below 1".into()));
            }
        }
        for &t in &self.amplitudes {
            self.check_amplitude(t)?;
        }
        Ok(())
    }

    /// Validate including a non-empty amplitude list.
    pub fn validate_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.amplitudes.is_empty() {
            return Err(Error::Configuration("amplitude list is empty".into()));
        }
        Ok(())
    }

    pub fn check_amplitude(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Configuration("amplitude is not finite".into()));
        }
        let total: f64 = self.modes.iter().map(|m| m.amp.abs() * t.abs()).sum();
        if total > AMPLITUDE_BUDGET {
            return Err(Error::Configuration(format!(
                "Σ|amp|·|t| = {total} exceeds {AMPLITUDE_BUDGET}"
            )));
        }
        Ok(())
    }
}
