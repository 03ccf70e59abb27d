#![allow(dead_code)]

use rampflex::grid::GridModel;
use rampflex::models;
use rampflex::parametric::{FeasibleBounds, ValueFunctions};
use rampflex::tolerance::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bundled() -> Vec<GridModel> {
    vec![models::three_bus(), models::garver6()]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn value_functions(model: &GridModel) -> ValueFunctions {
    ValueFunctions::new(model, Tolerances::default()).unwrap()
}

/// Cost scale used for absolute comparisons.
pub fn cost_scale(bounds: &FeasibleBounds) -> f64 {
    bounds.theta_max.abs().max(1.0)
}

/// Uniform point strictly inside the feasible region.
pub fn region_point(bounds: &FeasibleBounds, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (w, h) = (bounds.down_max.hi(), bounds.up_max.hi());
    let margin = 1e-6 * w.max(h);
    loop {
        let p = (rng.random_range(0.0..w), rng.random_range(0.0..h));
        if bounds.contains(p.0 + margin, p.1 + margin, 0.0) {
            return p;
        }
    }
}

/// Random points of the open region of interest: for a random level `θ`
/// and down award, the corner of the `θ` level set where neither award can
/// grow without raising cost.
pub fn interesting_points(vf: &ValueFunctions, bounds: &FeasibleBounds, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = rng(seed);
    let margin = 1e-6 * bounds.down_max.hi().max(bounds.up_max.hi());
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        assert!(tries < 100 * n, "region has too few interesting points");
        let theta = rng.random_range(bounds.base_cost..bounds.theta_max);
        let fd_axis = vf.maxdr(theta, 0.0).unwrap().unwrap();
        let fd = rng.random_range(0.0..fd_axis);
        let fu = vf.maxur(theta, fd).unwrap().unwrap();
        let fd = vf.maxdr(theta, fu).unwrap().unwrap();
        if fu > margin && fd > margin && bounds.contains(fu + margin, fd + margin, 0.0) {
            out.push((fu, fd));
        }
    }
    out
}
