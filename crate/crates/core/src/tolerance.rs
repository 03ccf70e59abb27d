//! Numerical tolerances shared by the solver and the geometric layers.

use serde::{Deserialize, Serialize};

/// Environment variable read by [`Tolerances::from_env`].
///
/// Format: comma-separated `key=value` pairs, e.g. `feas=1e-8,val=1e-7`.
/// Recognised keys: `feas`, `comp`, `val`, `slope`, `pivot`.
pub const TOLERANCE_ENV: &str = "RAMPFLEX_TOLERANCES";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute constraint violation accepted as feasible (MW).
    pub feas: f64,
    /// Bound on |dual × slack| at an optimum.
    pub comp: f64,
    /// Relative value tolerance; see [`Tolerances::val_tol`].
    pub val_rel: f64,
    /// Slopes closer than this (relative to the slope scale) are treated as equal.
    pub slope_rel: f64,
    /// Smallest pivot magnitude the simplex accepts.
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { feas: 1e-7, comp: 1e-6, val_rel: 1e-6, slope_rel: 1e-7, pivot: 1e-9 }
    }
}

impl Tolerances {
    /// `val_rel · max(1, |scale|)`.
    pub fn val_tol(&self, scale: f64) -> f64 {
        self.val_rel * scale.abs().max(1.0)
    }

    pub fn slope_tol(&self, scale: f64) -> f64 {
        self.slope_rel * scale.abs().max(1.0)
    }

    /// Defaults overridden by [`TOLERANCE_ENV`] when it is set.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(TOLERANCE_ENV) {
            Ok(spec) => Self::default().with_overrides(&spec),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn with_overrides(mut self, spec: &str) -> Result<Self, String> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in tolerance override, got {part:?}"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("tolerance {key} is not a number: {value:?}"))?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(format!("tolerance {key} must be positive, got {value}"));
            }
            match key.trim() {
                "feas" => self.feas = value,
                "comp" => self.comp = value,
                "val" => self.val_rel = value,
                "slope" => self.slope_rel = value,
                "pivot" => self.pivot = value,
                other => return Err(format!("unknown tolerance key {other:?}")),
            }
        }
        Ok(self)
    }
}
