//! Finite-player checks against a joint-state reference solver.

use twostate_mfg::nplayer_hjb::{solve_hjb, verify_majority};
use twostate_mfg::Params;

/// Symmetric Nash values on the full configuration space of three players,
/// integrated with classical RK4 on a fine step. `w[z]` is the value of
/// player 0 in configuration `z` (bit `j` = state of player `j`).
fn joint_reference(eta: f64, horizon: f64, steps: usize) -> [f64; 8] {
    const PLAYERS: usize = 3;
    let state = |z: usize, j: usize| (z >> j) & 1;
    let flip = |z: usize, j: usize| z ^ (1 << j);
    // Relabel so that player j sits in slot 0.
    let view = |z: usize, j: usize| {
        let (a, b) = (state(z, 0), state(z, j));
        let mut out = z & !(1 | (1 << j));
        out |= b;
        out |= a << j;
        out
    };
    let rhs = |w: &[f64; 8]| {
        let mut out = [0.0; 8];
        for z in 0..8 {
            let own = state(z, 0);
            let others_at_zero = (1..PLAYERS).filter(|&j| state(z, j) == 0).count() as f64 / 2.0;
            let cost = if own == 0 { 1.0 - others_at_zero } else { others_at_zero };
            let a0 = (w[z] - w[flip(z, 0)]).max(0.0);
            let mut f = cost - 0.5 * a0 * a0 + eta * (w[flip(z, 0)] - w[z]);
            for j in 1..PLAYERS {
                let zj = view(z, j);
                let aj = (w[zj] - w[flip(zj, 0)]).max(0.0);
                f += (aj + eta) * (w[flip(z, j)] - w[z]);
            }
            out[z] = f;
        }
        out
    };
    let h = horizon / steps as f64;
    let mut w = [0.0; 8];
    let add = |a: &[f64; 8], b: &[f64; 8], k: f64| {
        let mut o = *a;
        for i in 0..8 {
            o[i] += k * b[i];
        }
        o
    };
    for _ in 0..steps {
        let k1 = rhs(&w);
        let k2 = rhs(&add(&w, &k1, 0.5 * h));
        let k3 = rhs(&add(&w, &k2, 0.5 * h));
        let k4 = rhs(&add(&w, &k3, h));
        for i in 0..8 {
            w[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }
    w
}

#[test]
fn two_others_match_joint_state_solver() {
    for &eta in &[0.0, 0.25] {
        let reference = joint_reference(eta, 1.0, 20_000);
        let grid = solve_hjb(2, &Params::new(eta, 1.0, 0.5).unwrap(), 200).unwrap();
        for z in 0..8usize {
            let own = z & 1;
            let k = (1..3).filter(|&j| (z >> j) & 1 == 0).count();
            let v = grid.value(0, own, k);
            assert!((v - reference[z]).abs() < 1e-6, "eta {eta} z {z:03b}: {v} vs {}", reference[z]);
        }
    }
}

#[test]
fn sign_structure_across_horizons() {
    for &n in &[2usize, 3, 7, 16, 31, 50] {
        for &horizon in &[0.5, 1.0, 2.0, 3.0] {
            let params = Params::new(0.0, horizon, 0.5).unwrap();
            let steps = twostate_mfg::nplayer_hjb::recommended_steps(n, horizon, 0.0);
            let r = verify_majority(&solve_hjb(n, &params, steps).unwrap()).unwrap();
            assert!(r.is_clean(), "N {n} T {horizon}: {r:?}");
        }
    }
}
