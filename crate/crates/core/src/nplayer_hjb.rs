//! Finite-player game: backward HJB system on the empirical-measure grid
//! `θ_k = k/N` (fraction of the other `N` players at state 0), the Nash
//! feedback policy, and checks of its majority-following structure.
//!
//! The reduced solve integrates `V_k(t) = V(t, 1, θ_k)` only and recovers
//! state 0 through `V(t, 0, θ) = V(t, 1, 1 − θ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::master_entropy::EntropySolver;
use crate::real::Real;
use crate::scalar_model::ModelParams;

/// Tolerance on the a-priori band `0 ≤ V ≤ T − t`.
pub const BAND_TOL: f64 = 1e-6;

/// `V(t, 1, θ_k)` on the time mesh `t_j = jT/steps`.
#[derive(Debug, Clone, Serialize)]
pub struct ValueGrid<S> {
    pub n_others: usize,
    pub eta: S,
    pub horizon: S,
    pub t_mesh: Vec<S>,
    /// `v1[j][k] = V(t_j, 1, k/N)`.
    pub v1: Vec<Vec<S>>,
}

impl<S: Real> ValueGrid<S> {
    pub fn theta(&self, k: usize) -> S {
        S::lit(k as f64 / self.n_others as f64)
    }

    pub fn steps(&self) -> usize {
        self.t_mesh.len() - 1
    }

    /// `V(t_j, i, θ_k)`.
    pub fn value(&self, j: usize, i: usize, k: usize) -> S {
        if i == 1 {
            self.v1[j][k]
        } else {
            self.v1[j][self.n_others - k]
        }
    }

    /// `V(t_j, 0, ·)` as the index reversal of `V(t_j, 1, ·)`.
    pub fn v0_view(&self, j: usize) -> Vec<S> {
        self.v1[j].iter().rev().copied().collect()
    }

    /// `Y(t_j, θ_k) = V(t_j,1,θ_k) − V(t_j,0,θ_k)`.
    pub fn y(&self, j: usize, k: usize) -> S {
        self.v1[j][k] - self.v1[j][self.n_others - k]
    }

    /// `W(t_j, θ_k) = V(t_j,1,θ_k) − V(t_j,1,θ_{k−1})` for `k ≥ 1`.
    pub fn w(&self, j: usize, k: usize) -> S {
        self.v1[j][k] - self.v1[j][k - 1]
    }
}

/// Nash feedback `α(t_j, i, θ_k) = (V(t_j,i,θ_k) − V(t_j,1−i,θ_k))₊`.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyGrid<S> {
    pub n_others: usize,
    pub horizon: S,
    pub t_mesh: Vec<S>,
    /// `alpha[i][j][k]`.
    pub alpha: [Vec<Vec<S>>; 2],
}

impl<S: Real> PolicyGrid<S> {
    /// The zero control on a one-step mesh.
    pub fn zero(n_others: usize, horizon: S) -> Self {
        let row = vec![vec![S::zero(); n_others + 1]; 2];
        Self { n_others, horizon, t_mesh: vec![S::zero(), horizon], alpha: [row.clone(), row] }
    }

    /// Control at time `t`, piecewise constant from the left mesh node.
    pub fn rate(&self, t: S, i: usize, k: usize) -> Result<S> {
        if !(t >= S::zero() && t <= self.horizon) || i > 1 || k > self.n_others {
            return Err(Error::Config(format!(
                "policy lookup (t = {t}, i = {i}, k = {k}) outside the grid [0, {}] x {{0,1}} x 0..={}",
                self.horizon, self.n_others
            )));
        }
        let steps = self.t_mesh.len() - 1;
        let dt = self.horizon / S::lit(steps as f64);
        let j = (t / dt).floor().to_usize().unwrap_or(0).min(steps - 1);
        Ok(self.alpha[i][j][k])
    }
}

/// Steps keeping `h ≤ 0.1 / (N (2T + η))`.
pub fn recommended_steps<S: Real>(n_others: usize, horizon: S, eta: S) -> usize {
    let rate = S::lit(2.0) * horizon + eta;
    let h = S::lit(0.1) / (S::lit(n_others as f64) * rate);
    (horizon / h).ceil().to_usize().unwrap_or(1).max(1)
}

/// Time derivative of `V_k` backward in time (`−dV/dt`) for the reduced system.
fn reduced_rhs<S: Real>(v: &[S], eta: S, out: &mut [S]) {
    let n = v.len() - 1;
    let nf = S::lit(n as f64);
    let half = S::lit(0.5);
    for k in 0..=n {
        let theta = S::lit(k as f64) / nf;
        let a1 = (v[k] - v[n - k]).positive_part();
        let mut f = theta - half * a1 * a1 + eta * (v[n - k] - v[k]);
        if k < n {
            f = f + S::lit((n - k) as f64) * (a1 + eta) * (v[k + 1] - v[k]);
        }
        if k > 0 {
            let a0 = (v[n - k + 1] - v[k - 1]).positive_part();
            f = f + S::lit(k as f64) * (a0 + eta) * (v[k - 1] - v[k]);
        }
        out[k] = f;
    }
}

/// Backward RK4 on `dV/dτ = F(V)`, `τ = T − t`, checking the band after
/// every step. Returns the states ordered from `τ = T` (t = 0) to `τ = 0`.
fn backward_rk4<S: Real, F>(dim: usize, horizon: S, steps: usize, mut rhs: F, band: impl Fn(&[S], S) -> Option<S>, rec: usize) -> Result<Vec<Vec<S>>>
where
    F: FnMut(&[S], &mut [S]),
{
    let h = horizon / S::lit(steps as f64);
    let mut v = vec![S::zero(); dim];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(v.clone());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![S::zero(); dim], vec![S::zero(); dim], vec![S::zero(); dim], vec![S::zero(); dim], vec![S::zero(); dim]);
    let half = S::lit(0.5);
    let sixth = S::one() / S::lit(6.0);
    for s in 1..=steps {
        rhs(&v, &mut k1);
        for i in 0..dim {
            tmp[i] = v[i] + half * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = v[i] + half * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = v[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..dim {
            v[i] = v[i] + h * sixth * (k1[i] + S::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        let tau = h * S::lit(s as f64);
        if let Some(bad) = band(&v, tau) {
            return Err(Error::Unstable {
                time: (horizon - tau).as_f64(),
                value: bad.as_f64(),
                recommended_steps: rec,
            });
        }
        out.push(v.clone());
    }
    out.reverse();
    Ok(out)
}

fn band_violation<S: Real>(v: &[S], tau: S) -> Option<S> {
    let tol = S::lit(BAND_TOL);
    v.iter().copied().find(|&x| !(x >= -tol && x <= tau + tol))
}

fn check_inputs<S: Real>(n_others: usize, steps: usize) -> Result<()> {
    if n_others < 1 {
        return Err(Error::InvalidParameter("need at least one other player".into()));
    }
    if steps < 1 {
        return Err(Error::InvalidParameter("need at least one time step".into()));
    }
    Ok(())
}

fn mesh<S: Real>(horizon: S, steps: usize) -> Vec<S> {
    (0..=steps).map(|j| horizon * S::lit(j as f64 / steps as f64)).collect()
}

/// Solves the reduced system for `V(t, 1, ·)` with `steps` RK4 steps.
pub fn solve_hjb<S: Real>(n_others: usize, params: &ModelParams<S>, steps: usize) -> Result<ValueGrid<S>> {
    check_inputs::<S>(n_others, steps)?;
    let (eta, horizon) = (params.eta, params.horizon);
    let rec = recommended_steps(n_others, horizon, eta);
    let v1 = backward_rk4(n_others + 1, horizon, steps, |v, out| reduced_rhs(v, eta, out), band_violation, rec)?;
    Ok(ValueGrid { n_others, eta, horizon, t_mesh: mesh(horizon, steps), v1 })
}

/// [`solve_hjb`] with [`recommended_steps`].
pub fn solve_hjb_default<S: Real>(n_others: usize, params: &ModelParams<S>) -> Result<ValueGrid<S>> {
    solve_hjb(n_others, params, recommended_steps(n_others, params.horizon, params.eta))
}

/// Both `V(t, 0, ·)` and `V(t, 1, ·)` without the symmetry reduction.
#[derive(Debug, Clone, Serialize)]
pub struct FullValueGrid<S> {
    pub n_others: usize,
    pub t_mesh: Vec<S>,
    /// `v[j][i][k]`.
    pub v: Vec<[Vec<S>; 2]>,
}

/// Integrates the `2(N + 1)` system for both states directly; neighbor
/// transitions act on `V(t, i, ·)`.
pub fn solve_hjb_unreduced<S: Real>(n_others: usize, params: &ModelParams<S>, steps: usize) -> Result<FullValueGrid<S>> {
    check_inputs::<S>(n_others, steps)?;
    let (eta, horizon) = (params.eta, params.horizon);
    let n = n_others;
    let nf = S::lit(n as f64);
    let half = S::lit(0.5);
    // Layout: index i * (n + 1) + k.
    let rhs = |v: &[S], out: &mut [S]| {
        let at = |i: usize, k: usize| v[i * (n + 1) + k];
        let alpha = |i: usize, k: usize| (at(i, k) - at(1 - i, k)).positive_part();
        for i in 0..2 {
            for k in 0..=n {
                let theta = S::lit(k as f64) / nf;
                let cost = if i == 0 { S::one() - theta } else { theta };
                let own = alpha(i, k);
                let mut f = cost - half * own * own + eta * (at(1 - i, k) - at(i, k));
                if k < n {
                    f = f + S::lit((n - k) as f64) * (alpha(1, k + 1 - i) + eta) * (at(i, k + 1) - at(i, k));
                }
                if k > 0 {
                    f = f + S::lit(k as f64) * (alpha(0, k - i) + eta) * (at(i, k - 1) - at(i, k));
                }
                out[i * (n + 1) + k] = f;
            }
        }
    };
    let rec = recommended_steps(n, horizon, eta);
    let states = backward_rk4(2 * (n + 1), horizon, steps, rhs, band_violation, rec)?;
    let v = states.into_iter().map(|s| [s[..=n].to_vec(), s[n + 1..].to_vec()]).collect();
    Ok(FullValueGrid { n_others, t_mesh: mesh(horizon, steps), v })
}

pub fn extract_policy<S: Real>(grid: &ValueGrid<S>) -> PolicyGrid<S> {
    let n = grid.n_others;
    let mut alpha: [Vec<Vec<S>>; 2] = [Vec::new(), Vec::new()];
    for j in 0..grid.t_mesh.len() {
        let a1: Vec<S> = (0..=n).map(|k| grid.y(j, k).positive_part()).collect();
        let a0: Vec<S> = (0..=n).map(|k| (-grid.y(j, k)).positive_part()).collect();
        alpha[0].push(a0);
        alpha[1].push(a1);
    }
    PolicyGrid { n_others: n, horizon: grid.horizon, t_mesh: grid.t_mesh.clone(), alpha }
}

/// Sign checks of the Nash value at `η = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MajorityReport<S> {
    /// Points violating `Y ≥ 0` for `θ ≥ 1/2` or `Y ≤ 0` for `θ ≤ 1/2`.
    pub y_violations: usize,
    pub worst_y: S,
    /// Points with `θ < 1/2` violating `W ≥ 0`, the minority-side increment.
    pub w_violations: usize,
    pub worst_w: S,
    /// Points outside `0 ≤ V ≤ T − t`.
    pub band_violations: usize,
    pub worst_band: S,
    pub checked: usize,
}

impl<S: Real> MajorityReport<S> {
    pub fn is_clean(&self) -> bool {
        self.y_violations == 0 && self.w_violations == 0 && self.band_violations == 0
    }
}

/// Tolerance used by [`verify_majority`].
pub const MAJORITY_TOL: f64 = 1e-9;

pub fn verify_majority<S: Real>(grid: &ValueGrid<S>) -> Result<MajorityReport<S>> {
    if grid.eta != S::zero() {
        return Err(Error::Precondition(format!("majority structure is checked only for eta = 0, got {}", grid.eta)));
    }
    let tol = S::lit(MAJORITY_TOL);
    let n = grid.n_others;
    let mut r = MajorityReport {
        y_violations: 0,
        worst_y: S::zero(),
        w_violations: 0,
        worst_w: S::zero(),
        band_violations: 0,
        worst_band: S::zero(),
        checked: 0,
    };
    for (j, &t) in grid.t_mesh.iter().enumerate() {
        for k in 0..=n {
            r.checked += 1;
            // Signed violation amounts; positive means wrong side.
            let y = grid.y(j, k);
            let y_bad = match (2 * k).cmp(&n) {
                std::cmp::Ordering::Greater => -y,
                std::cmp::Ordering::Less => y,
                std::cmp::Ordering::Equal => y.abs(),
            };
            if y_bad > tol {
                r.y_violations += 1;
            }
            r.worst_y = r.worst_y.max(y_bad);
            if 2 * k < n && k >= 1 {
                let w_bad = -grid.w(j, k);
                if w_bad > tol {
                    r.w_violations += 1;
                }
                r.worst_w = r.worst_w.max(w_bad);
            }
            let v = grid.v1[j][k];
            let band_bad = (-v).max(v - (grid.horizon - t));
            if band_bad > tol {
                r.band_violations += 1;
            }
            r.worst_band = r.worst_band.max(band_bad);
        }
    }
    Ok(r)
}

/// `sup |V(t,1,θ) − U(t,1,θ)|` over the selected mesh times.
#[derive(Debug, Clone, Serialize)]
pub struct MasterComparison<S> {
    pub n_others: usize,
    pub exclusion: S,
    /// `(t_j, sup over θ)` for each requested mesh index.
    pub per_time: Vec<(S, S)>,
    pub sup_error: S,
    pub points: usize,
}

/// Compares `V(t_j, 1, θ_k)` against the entropy-selected master value at
/// time-to-go `T − t_j` for `|θ_k − 1/2| > exclusion`.
pub fn compare_to_master<S: Real>(grid: &ValueGrid<S>, exclusion: S, time_indices: &[usize]) -> Result<MasterComparison<S>> {
    if grid.eta != S::zero() {
        return Err(Error::Precondition(format!("comparison is defined for eta = 0, got {}", grid.eta)));
    }
    let solver = EntropySolver::new(grid.eta)?;
    let mut per_time = Vec::with_capacity(time_indices.len());
    let mut sup_error = S::zero();
    let mut points = 0;
    for &j in time_indices {
        let t = *grid
            .t_mesh
            .get(j)
            .ok_or_else(|| Error::InvalidParameter(format!("time index {j} beyond the mesh")))?;
        let to_go = grid.horizon - t;
        let mut sup = S::zero();
        for k in 0..=grid.n_others {
            let theta = grid.theta(k);
            if (theta - S::lit(0.5)).abs() <= exclusion {
                continue;
            }
            let (_, u1) = solver.reconstruct_pair(to_go, theta, None)?;
            sup = sup.max((grid.v1[j][k] - u1).abs());
            points += 1;
        }
        sup_error = sup_error.max(sup);
        per_time.push((t, sup));
    }
    Ok(MasterComparison { n_others: grid.n_others, exclusion, per_time, sup_error, points })
}
