use serde::{Deserialize, Serialize};

use super::ParametricError;
use crate::format::fmt9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Convex,
    Concave,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
}

/// Continuous piecewise-linear function on `[breakpoints[0], breakpoints[last]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    orientation: Orientation,
    monotonicity: Monotonicity,
}

impl PiecewiseLinearFn {
    /// Checks shape and monotonicity/curvature with tolerances
    /// `val_tol` (absolute, on values) and `slope_tol` (absolute, on slopes).
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        orientation: Orientation,
        monotonicity: Monotonicity,
        val_tol: f64,
        slope_tol: f64,
    ) -> Result<Self, ParametricError> {
        let invalid = |m: String| Err(ParametricError::InvalidFunction(m));
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return invalid(format!("{} breakpoints for {} values", breakpoints.len(), values.len()));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return invalid("non-finite breakpoint or value".into());
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("breakpoints are not strictly increasing".into());
        }
        let f = PiecewiseLinearFn { breakpoints, values, orientation, monotonicity };
        for w in f.values.windows(2) {
            let bad = match monotonicity {
                Monotonicity::Nondecreasing => w[1] < w[0] - val_tol,
                Monotonicity::Nonincreasing => w[1] > w[0] + val_tol,
            };
            if bad {
                return invalid(format!("values violate {monotonicity:?}: {} then {}", w[0], w[1]));
            }
        }
        for w in f.slopes().windows(2) {
            let bad = match orientation {
                Orientation::Convex => w[1] < w[0] - slope_tol,
                Orientation::Concave => w[1] > w[0] + slope_tol,
            };
            if bad {
                return invalid(format!("slopes violate {orientation:?}: {} then {}", w[0], w[1]));
            }
        }
        Ok(f)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn lo(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Number of linear pieces.
    pub fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Slope of each piece, in order.
    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Value at `x`; `None` outside the domain (a relative slack of 1e-12 is
    /// clamped).
    pub fn eval(&self, x: f64) -> Option<f64> {
        let slack = 1e-12 * (self.hi() - self.lo()).abs().max(1.0);
        if x < self.lo() - slack || x > self.hi() + slack || x.is_nan() {
            return None;
        }
        if self.breakpoints.len() == 1 {
            return Some(self.values[0]);
        }
        let x = x.clamp(self.lo(), self.hi());
        let i = match self.breakpoints.partition_point(|&b| b <= x) {
            0 => 0,
            k => (k - 1).min(self.breakpoints.len() - 2),
        };
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Graph vertices `(x, f(x))`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.iter().copied().zip(self.values.iter().copied())
    }

    /// CSV with header `breakpoint,value,left_slope`; the first row has an
    /// empty slope.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("breakpoint,value,left_slope\n");
        let slopes = self.slopes();
        for (i, (x, y)) in self.points().enumerate() {
            let slope = if i == 0 { String::new() } else { fmt9(slopes[i - 1]) };
            out.push_str(&format!("{},{},{}\n", fmt9(x), fmt9(y), slope));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> PiecewiseLinearFn {
        PiecewiseLinearFn::new(
            vec![0.0, 30.0, 40.0, 60.0],
            vec![12400.0, 12400.0, 12800.0, 14200.0],
            Orientation::Convex,
            Monotonicity::Nondecreasing,
            1e-6,
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn evaluates_between_breakpoints() {
        let f = tent();
        assert_eq!(f.eval(0.0), Some(12400.0));
        assert_eq!(f.eval(35.0), Some(12600.0));
        assert_eq!(f.eval(60.0), Some(14200.0));
        assert_eq!(f.eval(60.5), None);
        assert_eq!(f.slopes(), vec![0.0, 40.0, 70.0]);
    }

    #[test]
    fn rejects_broken_invariants() {
        let concave_values = vec![0.0, 10.0, 15.0];
        let r = PiecewiseLinearFn::new(
            vec![0.0, 1.0, 2.0],
            concave_values.clone(),
            Orientation::Convex,
            Monotonicity::Nondecreasing,
            1e-9,
            1e-9,
        );
        assert!(r.is_err());
        let r = PiecewiseLinearFn::new(
            vec![0.0, 1.0, 2.0],
            concave_values,
            Orientation::Concave,
            Monotonicity::Nonincreasing,
            1e-9,
            1e-9,
        );
        assert!(r.is_err());
        let r = PiecewiseLinearFn::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            Orientation::Convex,
            Monotonicity::Nondecreasing,
            1e-9,
            1e-9,
        );
        assert!(r.is_err());
    }

    #[test]
    fn csv_export() {
        let csv = tent().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "breakpoint,value,left_slope");
        assert_eq!(lines[1], "0,12400,");
        assert_eq!(lines[3], "40,12800,40");
    }
}
