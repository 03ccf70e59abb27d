//! Network data model and the dispatch programs built on it.
//!
//! A [`GridModel`] is a DC network with generators, per-period bus loads and a
//! horizon `T >= 2`. Period 0 is dispatched against each generator's initial
//! output; ramping awards are reserved for periods `1..T`.

mod dispatch;
mod ptdf;

pub use dispatch::{
    build_maxdr_lp, build_maxur_lp, build_minc_lp, solve_dispatch, solve_dispatch_with, DispatchSolution, Labels,
};
pub use ptdf::{compute_shift_factors, ShiftFactors};

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cannot read model: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse model: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("network is disconnected: bus {0} is unreachable from the slack bus")]
    Disconnected(u32),
    #[error("line {index} ({from}-{to}) has nonpositive reactance {reactance}")]
    NonPositiveReactance { index: usize, from: u32, to: u32, reactance: f64 },
    #[error("negative parameter: {0}")]
    NegativeParameter(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: u32,
    pub to: u32,
    /// Per-unit on a 100 MVA base.
    pub reactance: f64,
    /// MW; `None` means the line is unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: u32,
    /// Energy bid, currency/MW.
    pub energy_bid: f64,
    /// MW per period.
    pub ramp_limit: f64,
    #[serde(default)]
    pub g_min: f64,
    pub g_max: f64,
    pub initial_output: f64,
    #[serde(default)]
    pub ramp_up_bid: f64,
    #[serde(default)]
    pub ramp_down_bid: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    #[serde(default)]
    pub name: String,
    pub buses: Vec<u32>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub slack_bus: u32,
    pub horizon: usize,
    /// `loads[t][i]` is the predicted load at `buses[i]` in period `t`, MW.
    pub loads: Vec<Vec<f64>>,
}

impl GridModel {
    pub fn from_json(text: &str) -> Result<GridModel, GridError> {
        let model: GridModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GridModel, GridError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid model serializes")
    }

    pub fn bus_index(&self, bus: u32) -> Option<usize> {
        self.buses.iter().position(|&b| b == bus)
    }

    pub fn total_load(&self, t: usize) -> f64 {
        self.loads[t].iter().sum()
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let invalid = |msg: String| Err(GridError::Invalid(msg));
        if self.buses.is_empty() {
            return invalid("no buses".into());
        }
        let mut seen = HashSet::new();
        for &b in &self.buses {
            if !seen.insert(b) {
                return invalid(format!("duplicate bus {b}"));
            }
        }
        if self.bus_index(self.slack_bus).is_none() {
            return invalid(format!("slack bus {} is not a bus", self.slack_bus));
        }
        if self.horizon < 2 {
            return invalid(format!("horizon must be at least 2, got {}", self.horizon));
        }
        if self.loads.len() != self.horizon {
            return invalid(format!("{} load vectors for horizon {}", self.loads.len(), self.horizon));
        }
        for (t, row) in self.loads.iter().enumerate() {
            if row.len() != self.buses.len() {
                return invalid(format!("load vector {t} has {} entries for {} buses", row.len(), self.buses.len()));
            }
            if row.iter().any(|d| !d.is_finite()) {
                return invalid(format!("load vector {t} has a non-finite entry"));
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            for b in [l.from, l.to] {
                if self.bus_index(b).is_none() {
                    return invalid(format!("line {i} references unknown bus {b}"));
                }
            }
            if l.from == l.to {
                return invalid(format!("line {i} is a self-loop at bus {}", l.from));
            }
            if !(l.reactance > 0.0) || !l.reactance.is_finite() {
                return Err(GridError::NonPositiveReactance { index: i, from: l.from, to: l.to, reactance: l.reactance });
            }
            if let Some(c) = l.capacity {
                if !(c >= 0.0) || c.is_nan() {
                    return invalid(format!("line {i} has negative capacity {c}"));
                }
            }
        }
        if self.generators.is_empty() {
            return invalid("no generators".into());
        }
        let mut ids = HashSet::new();
        for g in &self.generators {
            if !ids.insert(g.id.as_str()) {
                return invalid(format!("duplicate generator id {}", g.id));
            }
            if self.bus_index(g.bus).is_none() {
                return invalid(format!("generator {} sits at unknown bus {}", g.id, g.bus));
            }
            let nums = [g.energy_bid, g.ramp_limit, g.g_min, g.g_max, g.initial_output, g.ramp_up_bid, g.ramp_down_bid];
            if nums.iter().any(|x| !x.is_finite()) {
                return invalid(format!("generator {} has a non-finite parameter", g.id));
            }
            if !(0.0 <= g.g_min && g.g_min <= g.g_max) {
                return invalid(format!("generator {}: need 0 <= g_min <= g_max", g.id));
            }
            if g.ramp_limit < 0.0 {
                return invalid(format!("generator {}: negative ramp limit", g.id));
            }
            if !(g.g_min <= g.initial_output && g.initial_output <= g.g_max) {
                return invalid(format!("generator {}: initial output outside [g_min, g_max]", g.id));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<(), GridError> {
        let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
        for l in &self.lines {
            adj.entry(l.from).or_default().push(l.to);
            adj.entry(l.to).or_default().push(l.from);
        }
        let mut reached = HashSet::from([self.slack_bus]);
        let mut queue = VecDeque::from([self.slack_bus]);
        while let Some(b) = queue.pop_front() {
            for &n in adj.get(&b).into_iter().flatten() {
                if reached.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        match self.buses.iter().find(|b| !reached.contains(b)) {
            Some(&b) => Err(GridError::Disconnected(b)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn bundled_models_validate() {
        let m = models::three_bus();
        assert_eq!(m.generators.len(), 3);
        assert_eq!(m.total_load(0), 110.0);
        assert_eq!(m.total_load(1), 120.0);
        let g = models::garver6();
        assert_eq!(g.buses.len(), 6);
        assert!((g.total_load(1) - 189.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let m = models::garver6();
        assert_eq!(GridModel::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn invariants_are_enforced() {
        let base = models::three_bus();
        let mut m = base.clone();
        m.horizon = 1;
        m.loads.truncate(1);
        assert!(matches!(m.validate(), Err(GridError::Invalid(_))));

        let mut m = base.clone();
        m.generators[0].initial_output = 150.0;
        assert!(matches!(m.validate(), Err(GridError::Invalid(_))));

        let mut m = base.clone();
        m.generators[1].bus = 9;
        assert!(matches!(m.validate(), Err(GridError::Invalid(_))));

        let mut m = base.clone();
        m.loads[1].pop();
        assert!(matches!(m.validate(), Err(GridError::Invalid(_))));

        let mut m = base.clone();
        m.lines.retain(|l| l.from != 3 && l.to != 3);
        assert!(matches!(m.validate(), Err(GridError::Disconnected(1))));

        let mut m = base;
        m.lines[0].reactance = 0.0;
        assert!(matches!(m.validate(), Err(GridError::NonPositiveReactance { index: 0, .. })));
    }
}
