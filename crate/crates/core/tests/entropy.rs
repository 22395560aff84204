use proptest::prelude::*;

use twostate_mfg::characteristics::{eval_x, first_zero_of_x};
use twostate_mfg::mfg_enumerator::{entropy_velocity_with, recover_on_mesh};
use twostate_mfg::quadrature::PeriodTable;
use twostate_mfg::Params;
use twostate_mfg::master_entropy::{
    build_field, pde_residual_audit, reconstruct_u, EntropySolver, EntropyValue,
};

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * (i as f64 + 0.5) / n as f64)
}

#[test]
fn inversion_round_trip_on_grid() {
    for &eta in &[0.0f64, 0.1, 0.6] {
        let solver = EntropySolver::new(eta).unwrap();
        for t in linspace(0.02, 2.5, 50) {
            let branch = solver.branch(t).unwrap();
            let xs: Vec<f64> = linspace(0.0, 1.0, 50).collect();
            let vs = branch.invert_ascending(&xs).unwrap();
            for (&x, &v) in xs.iter().zip(&vs) {
                let back = eval_x(v, eta, t).unwrap();
                assert!((back - x).abs() < 1e-8, "eta {eta} t {t} x {x}: {back}");
                assert!(t < first_zero_of_x(v, eta).unwrap() + 1e-9);
            }
        }
    }
}

#[test]
fn master_difference_matches_entropy_value() {
    let table = PeriodTable::new(0.0f64).unwrap();
    let solver = EntropySolver::new(0.0f64).unwrap();
    for t in linspace(0.05, 3.0, 20) {
        for theta in linspace(0.0, 1.0, 20) {
            let params = Params::new(0.0, t, theta).unwrap();
            let v = entropy_velocity_with(&params, Some(&table)).unwrap();
            let sol = recover_on_mesh(v, &params, Some(400)).unwrap();
            let (u0, u1) = (sol.u0[0], sol.u1[0]);
            let y = solver.eval_entropy_y(2.0 * theta - 1.0, t).unwrap().value_or_nan();
            assert!((u1 - u0 - y).abs() < 1e-6, "t {t} theta {theta}: {} vs {y}", u1 - u0);
        }
    }
}

#[test]
fn master_symmetry_between_states() {
    for &eta in &[0.0f64, 0.3, 0.7] {
        for &(t, theta) in &[(0.4, 0.2), (1.9, 0.7), (2.6, 0.05)] {
            let a = reconstruct_u(t, 0, theta, eta).unwrap();
            let b = reconstruct_u(t, 1, 1.0 - theta, eta).unwrap();
            assert!((a - b).abs() < 1e-9, "eta {eta} t {t} theta {theta}: {a} vs {b}");
        }
    }
}

#[test]
fn smooth_regime_converges_at_second_order() {
    let coarse = pde_residual_audit(&build_field(0.6f64, 1.0, 100, 101).unwrap(), 0.0);
    let fine = pde_residual_audit(&build_field(0.6f64, 1.0, 200, 201).unwrap(), 0.0);
    let order = (coarse.max_residual / fine.max_residual).log2();
    assert!(order > 1.9, "{} -> {}: {order}", coarse.max_residual, fine.max_residual);
}

#[test]
fn smooth_regime_has_no_jump_at_center() {
    let mut jumps = Vec::new();
    for &nx in &[41usize, 81, 161] {
        let f = build_field(0.6f64, 1.0, 10, nx).unwrap();
        let c = nx / 2;
        let jump = f.y.iter().map(|row| (row[c + 1] - row[c - 1]).abs()).fold(0.0, f64::max);
        jumps.push(jump);
    }
    assert!(jumps[1] < 0.6 * jumps[0] && jumps[2] < 0.6 * jumps[1], "{jumps:?}");
}

#[test]
fn large_eta_never_shocks() {
    let solver = EntropySolver::new(0.6f64).unwrap();
    for &t in &[0.2, 1.0, 3.0] {
        assert_eq!(solver.eval_entropy_y(0.0, t).unwrap(), EntropyValue::Regular(0.0));
        let y = solver.eval_entropy_y(0.5, t).unwrap().value_or_nan();
        assert!(y.is_finite() && y > 0.0);
    }
}

#[test]
fn shock_value_is_zero_hit_speed() {
    let solver = EntropySolver::new(0.0f64).unwrap();
    for &t in &[1.8, 2.4, 3.0] {
        let w = solver.branch(t).unwrap().lower;
        let near = solver.eval_entropy_y(1e-10, t).unwrap().value_or_nan();
        assert!((near - w).abs() < 1e-6, "t {t}: {near} vs {w}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn entropy_value_is_odd(x in 0.0f64..1.0, t in 0.05f64..3.0, eta in 0.0f64..0.9) {
        let s = EntropySolver::new(eta).unwrap();
        let a = s.eval_entropy_y(x, t).unwrap();
        let b = s.eval_entropy_y(-x, t).unwrap();
        match (a, b) {
            (EntropyValue::Regular(a), EntropyValue::Regular(b)) => prop_assert_eq!(a, -b),
            (EntropyValue::Shock { minus, plus }, _) => prop_assert_eq!(minus, -plus),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn entropy_value_is_monotone_in_x(x in 0.01f64..0.95, dx in 1e-3f64..0.05, t in 0.05f64..3.0, eta in 0.0f64..0.9) {
        let s = EntropySolver::new(eta).unwrap();
        let b = s.branch(t).unwrap();
        let lo = b.value(x).unwrap();
        let hi = b.value(x + dx).unwrap();
        prop_assert!(lo >= 0.0 && hi >= lo);
    }
}
