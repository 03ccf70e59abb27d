use nalgebra::DMatrix;

use super::{GridError, GridModel};

/// DC power transfer distribution factors.
///
/// `h[(l, i)]` is the flow on line `l` (from → to) per MW injected at bus
/// `buses[i]` and withdrawn at the slack bus.
#[derive(Clone, Debug)]
pub struct ShiftFactors {
    pub h: DMatrix<f64>,
}

impl ShiftFactors {
    pub fn factor(&self, line: usize, bus_index: usize) -> f64 {
        self.h[(line, bus_index)]
    }
}

pub fn compute_shift_factors(model: &GridModel) -> Result<ShiftFactors, GridError> {
    for (index, l) in model.lines.iter().enumerate() {
        if !(l.reactance > 0.0) || !l.reactance.is_finite() {
            return Err(GridError::NonPositiveReactance { index, from: l.from, to: l.to, reactance: l.reactance });
        }
    }
    model.check_connected()?;
    let nb = model.buses.len();
    let slack = model
        .bus_index(model.slack_bus)
        .ok_or_else(|| GridError::Invalid(format!("slack bus {} is not a bus", model.slack_bus)))?;
    let ends: Vec<(usize, usize)> = model
        .lines
        .iter()
        .map(|l| (model.bus_index(l.from).unwrap(), model.bus_index(l.to).unwrap()))
        .collect();

    // Reduced susceptance matrix with the slack row and column removed.
    let reduced = |i: usize| if i < slack { Some(i) } else if i > slack { Some(i - 1) } else { None };
    let mut b = DMatrix::<f64>::zeros(nb - 1, nb - 1);
    for (l, &(f, t)) in model.lines.iter().zip(&ends) {
        let y = 1.0 / l.reactance;
        for (p, q, s) in [(f, f, y), (t, t, y), (f, t, -y), (t, f, -y)] {
            if let (Some(p), Some(q)) = (reduced(p), reduced(q)) {
                b[(p, q)] += s;
            }
        }
    }
    let x = b
        .try_inverse()
        .ok_or_else(|| GridError::Invalid("singular susceptance matrix".into()))?;

    let mut h = DMatrix::<f64>::zeros(model.lines.len(), nb);
    for (l, (line, &(f, t))) in model.lines.iter().zip(&ends).enumerate() {
        for k in 0..nb {
            let Some(kr) = reduced(k) else { continue };
            let theta = |i: usize| reduced(i).map_or(0.0, |ir| x[(ir, kr)]);
            h[(l, k)] = (theta(f) - theta(t)) / line.reactance;
        }
    }
    Ok(ShiftFactors { h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Generator, Line};

    fn model(buses: Vec<u32>, lines: Vec<(u32, u32, f64)>, slack: u32) -> GridModel {
        let n = buses.len();
        GridModel {
            name: String::new(),
            buses,
            lines: lines.into_iter().map(|(from, to, reactance)| Line { from, to, reactance, capacity: None }).collect(),
            generators: vec![Generator {
                id: "G".into(),
                bus: slack,
                energy_bid: 1.0,
                ramp_limit: 1.0,
                g_min: 0.0,
                g_max: 1.0,
                initial_output: 0.0,
                ramp_up_bid: 0.0,
                ramp_down_bid: 0.0,
            }],
            slack_bus: slack,
            horizon: 2,
            loads: vec![vec![0.0; n]; 2],
        }
    }

    #[test]
    fn single_line() {
        let h = compute_shift_factors(&model(vec![1, 2], vec![(1, 2, 0.1)], 2)).unwrap();
        assert!((h.factor(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(h.factor(0, 1), 0.0);
    }

    #[test]
    fn ring_splits_by_path_reactance() {
        // Hand solution of the 2x2 system: B = [[2,-1],[-1,2]] / x, injection at
        // bus 1 gives theta = (2/3, 1/3) x, so 2/3 goes direct and 1/3 via bus 2.
        let m = model(vec![1, 2, 3], vec![(1, 2, 0.2), (2, 3, 0.2), (1, 3, 0.2)], 3);
        let h = compute_shift_factors(&m).unwrap();
        assert!((h.factor(2, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((h.factor(0, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((h.factor(1, 0) - 1.0 / 3.0).abs() < 1e-12);
        for l in 0..3 {
            assert_eq!(h.factor(l, 2), 0.0);
        }
    }

    #[test]
    fn bad_networks_are_rejected() {
        let m = model(vec![1, 2, 3], vec![(1, 2, 0.2)], 1);
        assert!(matches!(compute_shift_factors(&m), Err(GridError::Disconnected(3))));
        let m = model(vec![1, 2], vec![(1, 2, -0.2)], 1);
        assert!(matches!(compute_shift_factors(&m), Err(GridError::NonPositiveReactance { .. })));
    }
}
