//! Biological model parameters and their on-disk key-value format.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

/// Calibrated constants of the consortium model.
///
/// The default values describe a thiamine-secreting E. coli strain paired
/// with a thiamine-auxotroph alga. Any field may be overridden; derived
/// bounds such as [`ModelParams::d_rho_bound`] are always recomputed from
/// the current values, never cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Half-saturation constant for vitamin uptake [mg/L].
    pub k_v: f64,
    /// Half-saturation constant for glucose uptake [g/L].
    pub k_s: f64,
    /// Maximal vitamin uptake rate of the alga [mg/(g day)].
    pub rho_max: f64,
    /// Maximal bacterial growth rate [1/day].
    pub phi_max: f64,
    /// Minimal internal vitamin quota for algal growth [mg/g].
    pub q_min: f64,
    /// Bacterial growth yield on glucose [g/g].
    pub gamma: f64,
    /// Maximal algal growth rate [1/day].
    pub mu_max: f64,
    /// Vitamin synthesis yield of the engineered pathway [mg/g].
    pub beta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k_v: 0.57,
            k_s: 0.09,
            rho_max: 27.3,
            phi_max: 6.48,
            q_min: 2.76,
            gamma: 0.44,
            mu_max: 1.02,
            beta: 23.0,
        }
    }
}

const KEYS: [&str; 8] = [
    "k_v", "k_s", "rho_max", "phi_max", "q_min", "gamma", "mu_max", "beta",
];

impl ModelParams {
    /// Checks that every field is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Params(format!(
                    "{name} must be a finite positive number, got {value}"
                )));
            }
        }
        Ok(())
    }

    fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("k_v", self.k_v),
            ("k_s", self.k_s),
            ("rho_max", self.rho_max),
            ("phi_max", self.phi_max),
            ("q_min", self.q_min),
            ("gamma", self.gamma),
            ("mu_max", self.mu_max),
            ("beta", self.beta),
        ]
    }

    fn set(&mut self, key: &str, value: f64) {
        match key {
            "k_v" => self.k_v = value,
            "k_s" => self.k_s = value,
            "rho_max" => self.rho_max = value,
            "phi_max" => self.phi_max = value,
            "q_min" => self.q_min = value,
            "gamma" => self.gamma = value,
            "mu_max" => self.mu_max = value,
            "beta" => self.beta = value,
            _ => unreachable!("key checked by caller"),
        }
    }

    /// Parses a flat `key = value` text. Lines may carry `#` comments;
    /// blank lines are skipped. Any key not named in the struct, a duplicate
    /// key, or an unparsable value is an error. Keys that are absent keep
    /// their default value.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut params = ModelParams::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Params(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Params(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Params(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::Params(format!("line {}: `{key}` has a non-numeric value", lineno + 1))
            })?;
            params.set(key, value);
        }
        params.validate()?;
        Ok(params)
    }

    /// Loads parameters from a key-value file (see [`Self::from_key_values`]).
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Params(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_key_values(&text)
    }

    /// Renders the parameter set in the same key-value format accepted by
    /// [`Self::from_key_values`].
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (name, value) in self.fields() {
            out.push_str(&format!("{name} = {value}\n"));
        }
        out
    }

    /// Upper bound on the dilution rate imposed by vitamin-uptake
    /// saturation: `d * mu_inv(d) < rho_max` holds exactly for
    /// `d < mu_max * rho_max / (rho_max + q_min * mu_max)`.
    pub fn d_rho_bound(&self) -> f64 {
        self.mu_max * self.rho_max / (self.rho_max + self.q_min * self.mu_max)
    }
}
