mod common;

use proptest::prelude::*;
use rampflex::grid::build_minc_lp;
use rampflex::parametric::{construct_slice, feasible_bounds, Argument, SliceSpec, ValueFunction, ValueFunctions};
use rand::Rng;

use common::{bundled, interesting_points, value_functions};

fn direct(vf: &ValueFunctions, spec: &SliceSpec, x: f64) -> f64 {
    let v = match (spec.function, spec.vary) {
        (ValueFunction::MinC, Argument::Up) => vf.minc(x, spec.fixed),
        (ValueFunction::MinC, Argument::Down) => vf.minc(spec.fixed, x),
        (ValueFunction::MaxUR, Argument::Down) => vf.maxur(spec.fixed, x),
        (ValueFunction::MaxUR, Argument::Budget) => vf.maxur(x, spec.fixed),
        (ValueFunction::MaxDR, Argument::Up) => vf.maxdr(spec.fixed, x),
        (ValueFunction::MaxDR, Argument::Budget) => vf.maxdr(x, spec.fixed),
        _ => unreachable!(),
    };
    v.unwrap().expect("interior of a feasible slice")
}

/// A representative slice of every kind for a model.
fn slices(vf: &ValueFunctions) -> Vec<SliceSpec> {
    let b = feasible_bounds(vf).unwrap();
    let (w, h) = (b.down_max.hi(), b.up_max.hi());
    let mid_theta = 0.5 * (b.base_cost + b.theta_max);
    let spec = |function, vary, fixed, lo, hi| SliceSpec { function, vary, fixed, lo, hi };
    use Argument::*;
    use ValueFunction::*;
    vec![
        spec(MinC, Up, 0.0, 0.0, w),
        spec(MinC, Down, 0.0, 0.0, h),
        spec(MinC, Up, 0.5 * h, 0.0, b.up_max.eval(0.5 * h).unwrap()),
        spec(MinC, Down, 0.5 * w, 0.0, b.down_max.eval(0.5 * w).unwrap()),
        spec(MaxUR, Down, f64::INFINITY, 0.0, h),
        spec(MaxUR, Down, mid_theta, 0.0, vf.maxdr(mid_theta, 0.0).unwrap().unwrap()),
        spec(MaxDR, Up, mid_theta, 0.0, vf.maxur(mid_theta, 0.0).unwrap().unwrap()),
        spec(MaxUR, Budget, 0.0, b.base_cost, b.theta_max),
        spec(MaxDR, Budget, 0.0, b.base_cost, b.theta_max),
    ]
}

#[test]
fn slices_agree_with_direct_solves() {
    let mut rng = common::rng(11);
    for model in bundled() {
        let vf = value_functions(&model);
        let rows = build_minc_lp(&model, 0.0, 0.0).unwrap().inequalities().len();
        for spec in slices(&vf) {
            let slice = construct_slice(&vf, &spec).unwrap();
            let f = &slice.function;
            assert!(f.breakpoints().len() <= rows + 2, "{spec:?}: {} breakpoints", f.breakpoints().len());
            let scale = f.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for &x in f.breakpoints() {
                assert!((f.eval(x).unwrap() - direct(&vf, &spec, x)).abs() <= 1e-6 * scale);
            }
            for _ in 0..50 {
                let x = rng.random_range(spec.lo..spec.hi);
                let got = f.eval(x).unwrap();
                let want = direct(&vf, &spec, x);
                assert!((got - want).abs() <= 1e-6 * scale, "{} {spec:?} at {x}: {got} vs {want}", model.name);
            }
        }
    }
}

#[test]
fn inverse_identities_hold() {
    for model in bundled() {
        let vf = value_functions(&model);
        let b = feasible_bounds(&vf).unwrap();
        let scale = b.theta_max;
        let mw = b.down_max.hi().max(b.up_max.hi());
        let minc = |u: f64, d: f64| vf.minc(u, d).unwrap().unwrap();
        let maxur = |t: f64, d: f64| vf.maxur(t, d).unwrap().unwrap();
        let maxdr = |t: f64, u: f64| vf.maxdr(t, u).unwrap().unwrap();
        for (fu, fd) in interesting_points(&vf, &b, 20, 3) {
            let theta = minc(fu, fd);
            let close = |a: f64, b: f64, s: f64| (a - b).abs() <= 1e-6 * s;
            assert!(close(maxur(theta, fd), fu, mw), "MaxUR(MinC) at ({fu}, {fd})");
            assert!(close(minc(maxur(theta, fd), fd), theta, scale));
            assert!(close(maxdr(theta, fu), fd, mw), "MaxDR(MinC) at ({fu}, {fd})");
            assert!(close(minc(fu, maxdr(theta, fu)), theta, scale));
            assert!(close(maxur(theta, maxdr(theta, fu)), fu, mw));
            assert!(close(maxdr(theta, maxur(theta, fd)), fd, mw));
        }
    }
}

#[test]
fn upper_boundary_matches_free_budget() {
    for model in bundled() {
        let vf = value_functions(&model);
        let b = feasible_bounds(&vf).unwrap();
        assert!((b.up_max.eval(0.0).unwrap() - vf.maxur(f64::INFINITY, 0.0).unwrap().unwrap()).abs() < 1e-9);
        assert!((b.down_max.eval(0.0).unwrap() - vf.maxdr(f64::INFINITY, 0.0).unwrap().unwrap()).abs() < 1e-9);
        // Just beyond the boundary every program is infeasible.
        let fd = 0.3 * b.up_max.hi();
        let edge = b.up_max.eval(fd).unwrap();
        assert!(vf.minc(edge + 1e-3, fd).unwrap().is_none());
        assert!(vf.minc(edge - 1e-3, fd).unwrap().is_some());
    }
}

#[test]
fn slice_csv_export() {
    let vf = value_functions(&rampflex::models::three_bus());
    let spec = SliceSpec { function: ValueFunction::MinC, vary: Argument::Up, fixed: 0.0, lo: 0.0, hi: 60.0 };
    let csv = construct_slice(&vf, &spec).unwrap().function.to_csv();
    assert_eq!(csv.lines().next(), Some("breakpoint,value,left_slope"));
    assert_eq!(csv.lines().nth(1), Some("0,12400,"));
    assert_eq!(csv.lines().nth(2), Some("30,12400,0"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// MinC slices at arbitrary fixed arguments are convex and nondecreasing,
    /// and midpoints of every segment match direct solves.
    #[test]
    fn minc_slices_are_convex(which in 0usize..2, t in 0.0f64..1.0, up in any::<bool>()) {
        let model = &bundled()[which];
        let vf = value_functions(model);
        let b = feasible_bounds(&vf).unwrap();
        let spec = if up {
            let fd = t * b.up_max.hi();
            SliceSpec { function: ValueFunction::MinC, vary: Argument::Up, fixed: fd, lo: 0.0, hi: b.up_max.eval(fd).unwrap() }
        } else {
            let fu = t * b.down_max.hi();
            SliceSpec { function: ValueFunction::MinC, vary: Argument::Down, fixed: fu, lo: 0.0, hi: b.down_max.eval(fu).unwrap() }
        };
        prop_assume!(spec.hi - spec.lo > 1e-6);
        let f = construct_slice(&vf, &spec).unwrap().function;
        let slopes = f.slopes();
        for w in slopes.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-6 * w[0].abs().max(1.0));
        }
        prop_assert!(slopes.iter().all(|&s| s >= -1e-9));
        let scale = b.theta_max;
        for seg in f.breakpoints().windows(2) {
            let x = 0.5 * (seg[0] + seg[1]);
            prop_assert!((f.eval(x).unwrap() - direct(&vf, &spec, x)).abs() <= 1e-6 * scale);
        }
    }
}
