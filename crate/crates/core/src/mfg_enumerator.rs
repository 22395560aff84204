//! All equilibria of the forward-backward system for one `(η, T, θ̄)`.
//!
//! Equilibria correspond to initial velocities `v` with `x_v(T) = 2θ̄ − 1`.
//! For `η < 1/2` the velocity axis `v > 0` splits at the zero-hit speeds
//! `w_1 > w_2 > … > w_K` (`T_k(w_k) = T`):
//!
//! * on the stopped branch `(w_1, u)`, with `u` the speed escaping at `T`,
//!   the shooting map increases from 0 to `+∞`;
//! * on each bump `(w_{j+1}, w_j)` (`w_{K+1} = 0`) it keeps the sign
//!   `(−1)^j` and vanishes at both ends.
//!
//! Negative velocities follow from `x_{−v} = −x_v`.

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::{acceleration, shoot, shooting_value, Orbit};
use crate::error::{Error, Result};
use crate::quadrature::{escape_velocity, PeriodTable};
use crate::real::Real;
use crate::roots;
use crate::scalar_model::{regime, ModelParams};

/// Grid points per bump in the sign-change search.
const BUMP_GRID: usize = 512;

/// One equilibrium on a uniform mesh in forward time.
#[derive(Debug, Clone, Serialize)]
pub struct MfgSolution<S> {
    pub v: S,
    pub times: Vec<S>,
    pub theta: Vec<S>,
    pub u0: Vec<S>,
    pub u1: Vec<S>,
    pub y: Vec<S>,
    pub x: Vec<S>,
    /// The shooting map is tangent to the target at `v`.
    pub tangent: bool,
    pub residuals: Residuals<S>,
}

/// Central-difference residuals of the equilibrium system on the mesh interior.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Residuals<S> {
    /// Max residual of the two value-function equations.
    pub value: S,
    /// Max residual of the mass equation, away from sign changes of `y`.
    pub mass: S,
    /// `max |u1 − u0 − y|`.
    pub consistency: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CountKind {
    /// `θ̄ = 1/2` or `η ≥ 1/2`: the count is proven.
    ClosedForm,
    /// Count from the exhaustive branch search; only a lower bound is proven.
    NumericallyExhaustive,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationReport<S> {
    pub params: ModelParams<S>,
    pub solutions: Vec<MfgSolution<S>>,
    pub count: usize,
    pub closed_form_count: Option<usize>,
    pub count_kind: CountKind,
    pub entropy_selected: usize,
    /// Velocities where the shooting map only touches the target.
    pub tangencies: Vec<S>,
    /// Zero-hit speeds `w_k` splitting the positive velocity axis.
    pub zero_hit_speeds: Vec<S>,
    /// Speed `u` escaping exactly at `T`; no solution lies beyond `±u`.
    pub search_bound: S,
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions<S> {
    /// Root tolerance in `v`.
    pub tol: S,
    /// Mesh intervals for trajectory recovery; `None` picks `max(2048, 512 T)`.
    pub mesh: Option<usize>,
}

impl<S: Real> Default for EnumerateOptions<S> {
    fn default() -> Self {
        Self { tol: S::lit(1e-12), mesh: None }
    }
}

fn shooting_residual<S: Real>(v: S, params: &ModelParams<S>) -> S {
    match Orbit::new(v, params.eta).and_then(|o| o.x(params.horizon)) {
        Ok(x) => x,
        Err(Error::BlowUp { .. }) => v.signum() * S::infinity(),
        Err(_) => S::nan(),
    }
}

/// Speed `u > 0` whose orbit escapes exactly at the horizon.
fn escape_bound<S: Real>(params: &ModelParams<S>) -> Result<S> {
    escape_velocity(params.horizon, params.eta)
}

/// Zero-hit speeds `w_1 > … > w_K` at which `x_v(T) = 0`.
fn zero_hit_speeds<S: Real>(table: &PeriodTable<S>, horizon: S) -> Result<Vec<S>> {
    let mut out = Vec::new();
    let mut k = 1;
    while let Some(w) = table.zero_hit_velocity(k, horizon)? {
        out.push(w);
        k += 1;
    }
    Ok(out)
}

/// The unique `v ≥ 0` on the stopped branch with `x_v(T) = a ≥ 0`.
fn stopped_branch<S: Real>(params: &ModelParams<S>, lo: S, hi: S, a: S, tol: S) -> Result<S> {
    if a == S::zero() {
        return Ok(lo);
    }
    let f = |v: S| if v <= lo { -a } else { shooting_residual(v, params) - a };
    roots::brent(f, lo, hi, tol).map_err(|e| Error::UnresolvedBranch {
        branch: "stopped".into(),
        detail: format!("{e}"),
    })
}

fn golden_max<S: Real, F: Fn(S) -> S>(f: F, mut a: S, mut b: S, tol: S) -> (S, S) {
    let r = S::lit(0.618_033_988_749_894_8);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct BumpRoot<S> {
    v: S,
    tangent: bool,
}

/// Roots of `s·x_v(T) = a` on the open bump `(lo, hi)`, where `s·x_v(T) > 0`.
fn bump_roots<S: Real>(params: &ModelParams<S>, lo: S, hi: S, sign: S, a: S, tol: S) -> Result<Vec<BumpRoot<S>>> {
    let g = |v: S| sign * shooting_residual(v, params) - a;
    let n = BUMP_GRID;
    let vs: Vec<S> = (0..=n).map(|i| lo + (hi - lo) * S::lit(i as f64 / n as f64)).collect();
    let mut gs: Vec<S> = vs.iter().map(|&v| g(v)).collect();
    gs[0] = -a;
    gs[n] = -a;
    let tangency_tol = S::lit(1e-10).max(S::solve_tol());
    let mut roots_out = Vec::new();
    let solve = |l: S, r: S| {
        roots::brent(g, l, r, tol).map_err(|e| Error::UnresolvedBranch {
            branch: format!("bump ({lo}, {hi})"),
            detail: format!("{e}"),
        })
    };
    for i in 0..n {
        if gs[i] == S::zero() {
            roots_out.push(BumpRoot { v: vs[i], tangent: false });
        } else if gs[i] * gs[i + 1] < S::zero() {
            roots_out.push(BumpRoot { v: solve(vs[i], vs[i + 1])?, tangent: false });
        }
    }
    // Extrema between grid points may cross the level without a visible
    // sign change on the grid.
    for i in 1..n {
        let is_max = gs[i] >= gs[i - 1] && gs[i] >= gs[i + 1] && gs[i] < S::zero();
        let is_min = gs[i] <= gs[i - 1] && gs[i] <= gs[i + 1] && gs[i] > S::zero();
        if !(is_max || is_min) {
            continue;
        }
        let flip = if is_max { S::one() } else { -S::one() };
        let (vm, gm) = golden_max(|v| flip * g(v), vs[i - 1], vs[i + 1], tol);
        let gm = flip * gm;
        if gm.abs() <= tangency_tol {
            roots_out.push(BumpRoot { v: vm, tangent: true });
        } else if gm * gs[i] < S::zero() {
            roots_out.push(BumpRoot { v: solve(vs[i - 1], vm)?, tangent: false });
            roots_out.push(BumpRoot { v: solve(vm, vs[i + 1])?, tangent: false });
        }
    }
    roots_out.sort_by(|p, q| p.v.partial_cmp(&q.v).unwrap());
    roots_out.dedup_by(|p, q| (p.v - q.v).abs() <= S::lit(10.0) * tol);
    Ok(roots_out)
}

/// Every `v` with `x_v(T) = 2θ̄ − 1`, with the full equilibrium attached.
pub fn enumerate<S: Real>(params: &ModelParams<S>, options: EnumerateOptions<S>) -> Result<EnumerationReport<S>> {
    let c = params.target();
    let a = c.abs();
    let sign_c = if c < S::zero() { -S::one() } else { S::one() };
    let reg = regime(params.eta);
    let search_bound = escape_bound(params)?;

    let mut found: Vec<(S, bool)> = Vec::new();
    let mut speeds = Vec::new();
    let mut closed_form_count = None;

    if !reg.is_multiple() {
        found.push((sign_c * stopped_branch(params, S::zero(), search_bound, a, options.tol)?, false));
        closed_form_count = Some(1);
    } else {
        let table = PeriodTable::new(params.eta)?;
        speeds = zero_hit_speeds(&table, params.horizon)?;
        let lo = speeds.first().copied().unwrap_or_else(S::zero);
        if c == S::zero() {
            found.push((S::zero(), false));
            for &w in &speeds {
                found.push((w, false));
                found.push((-w, false));
            }
        } else {
            found.push((sign_c * stopped_branch(params, lo, search_bound, a, options.tol)?, false));
            let bumps: Vec<(S, S, S)> = (0..speeds.len())
                .map(|j| {
                    let hi = speeds[j];
                    let lo = speeds.get(j + 1).copied().unwrap_or_else(S::zero);
                    let sign = if j % 2 == 0 { -S::one() } else { S::one() };
                    (lo, hi, sign)
                })
                .collect();
            // On a bump of sign s, x_v = c for v > 0 when s = sign(c), and
            // x_{−v} = −x_v = c otherwise; both reduce to s·x_v = |c|.
            for (lo, hi, sign) in bumps {
                for r in bump_roots(params, lo, hi, sign, a, options.tol)? {
                    let v = if sign == sign_c { r.v } else { -r.v };
                    found.push((v, r.tangent));
                }
            }
        }
        if params.theta_bar == S::lit(0.5) {
            closed_form_count = Some(1 + 2 * table.branches_below(params.horizon) as usize);
        }
    }

    found.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let selected_v = found
        .iter()
        .map(|p| p.0)
        .find(|&v| {
            if c == S::zero() {
                v == S::zero()
            } else {
                v * sign_c > S::zero() && v.abs() > speeds.first().copied().unwrap_or_else(S::zero)
            }
        })
        .ok_or_else(|| Error::UnresolvedBranch { branch: "stopped".into(), detail: "no stopped solution".into() })?;

    let solutions: Vec<MfgSolution<S>> = found
        .par_iter()
        .map(|&(v, tangent)| {
            let mut sol = recover_on_mesh(v, params, options.mesh)?;
            sol.tangent = tangent;
            Ok(sol)
        })
        .collect::<Result<_>>()?;
    let entropy_selected = solutions.iter().position(|s| s.v == selected_v).unwrap();
    let tangencies = found.iter().filter(|p| p.1).map(|p| p.0).collect();
    Ok(EnumerationReport {
        params: *params,
        count: solutions.len(),
        solutions,
        closed_form_count,
        count_kind: if closed_form_count.is_some() { CountKind::ClosedForm } else { CountKind::NumericallyExhaustive },
        entropy_selected,
        tangencies,
        zero_hit_speeds: speeds,
        search_bound,
    })
}

/// `1 + 2·#{k : T_k(0+) < T}` at `θ̄ = 1/2`; 1 when `η ≥ 1/2`.
pub fn count_at_half<S: Real>(params: &ModelParams<S>) -> Result<usize> {
    if params.theta_bar != S::lit(0.5) {
        return Err(Error::Precondition(format!("count_at_half needs theta_bar = 1/2, got {}", params.theta_bar)));
    }
    if !regime(params.eta).is_multiple() {
        return Ok(1);
    }
    let table = PeriodTable::new(params.eta)?;
    Ok(1 + 2 * table.branches_below(params.horizon) as usize)
}

/// The equilibrium induced by the entropy solution: the unique solution on
/// the stopped branch `T < T₁(v)`.
pub fn entropy_select<S: Real>(params: &ModelParams<S>) -> Result<(S, MfgSolution<S>)> {
    entropy_select_on(params, None)
}

pub fn entropy_select_on<S: Real>(params: &ModelParams<S>, mesh: Option<usize>) -> Result<(S, MfgSolution<S>)> {
    let v = entropy_velocity(params)?;
    Ok((v, recover_on_mesh(v, params, mesh)?))
}

/// Velocity of the entropy-selected equilibrium, without trajectory recovery.
pub fn entropy_velocity<S: Real>(params: &ModelParams<S>) -> Result<S> {
    let table = if regime(params.eta).is_multiple() { Some(PeriodTable::new(params.eta)?) } else { None };
    entropy_velocity_with(params, table.as_ref())
}

/// [`entropy_velocity`] reusing a period table built for `params.eta`;
/// the table is required when `η < 1/2`.
pub fn entropy_velocity_with<S: Real>(params: &ModelParams<S>, table: Option<&PeriodTable<S>>) -> Result<S> {
    let c = params.target();
    if c == S::zero() {
        return Ok(S::zero());
    }
    let lo = match (regime(params.eta).is_multiple(), table) {
        (false, _) => S::zero(),
        (true, Some(tab)) if tab.eta == params.eta => {
            tab.zero_hit_velocity(1, params.horizon)?.unwrap_or_else(S::zero)
        }
        (true, _) => {
            return Err(Error::Precondition(format!("a period table for eta = {} is required", params.eta)));
        }
    };
    let hi = escape_bound(params)?;
    Ok(c.signum() * stopped_branch(params, lo, hi, c.abs(), S::lit(1e-13))?)
}

/// Full equilibrium for a solution velocity `v`.
pub fn recover_trajectories<S: Real>(v: S, params: &ModelParams<S>) -> Result<MfgSolution<S>> {
    recover_on_mesh(v, params, None)
}

/// `−u_i' = f(i,θ) − η(u_i − u_{1−i}) − ((u_i − u_{1−i})₊)²/2` with
/// `f(0,θ) = 1 − θ`, `f(1,θ) = θ`; returns `(−u0', −u1')`.
fn value_rhs<S: Real>(theta: S, u0: S, u1: S, eta: S) -> (S, S) {
    let half = S::lit(0.5);
    let d = u0 - u1;
    let p0 = d.positive_part();
    let p1 = (-d).positive_part();
    (S::one() - theta - eta * d - half * p0 * p0, theta + eta * d - half * p1 * p1)
}

fn theta_of<S: Real>(y: S, yd: S, eta: S) -> S {
    (S::lit(0.5) * (shooting_value(y, yd, eta) + S::one())).max(S::zero()).min(S::one())
}

pub fn default_mesh<S: Real>(horizon: S) -> usize {
    2048usize.max((S::lit(512.0) * horizon).ceil().to_usize().unwrap_or(2048))
}

/// Integrates `(y, ẏ, u0, u1)` jointly in time-to-go `s = T − t` from
/// `y = 0, ẏ = v, u = 0`, then reverses to forward time.
pub fn recover_on_mesh<S: Real>(v: S, params: &ModelParams<S>, mesh: Option<usize>) -> Result<MfgSolution<S>> {
    let eta = params.eta;
    let horizon = params.horizon;
    let m = mesh.unwrap_or_else(|| default_mesh(horizon)).max(4);
    let h = horizon / S::lit(m as f64);
    let half = S::lit(0.5);
    let two = S::lit(2.0);
    let rhs = |st: [S; 4]| -> [S; 4] {
        let theta = theta_of(st[0], st[1], eta);
        let (du0, du1) = value_rhs(theta, st[2], st[3], eta);
        [st[1], acceleration(st[0], eta), du0, du1]
    };
    let add = |a: [S; 4], b: [S; 4], k: S| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]];

    let mut states = Vec::with_capacity(m + 1);
    let mut st = [S::zero(), v, S::zero(), S::zero()];
    states.push(st);
    for _ in 0..m {
        let k1 = rhs(st);
        let k2 = rhs(add(st, k1, half * h));
        let k3 = rhs(add(st, k2, half * h));
        let k4 = rhs(add(st, k3, h));
        for j in 0..4 {
            st[j] = st[j] + h / S::lit(6.0) * (k1[j] + two * (k2[j] + k3[j]) + k4[j]);
        }
        if !st.iter().all(|c| c.is_finite()) || st[0].abs() > S::lit(1e6) {
            return Err(Error::BlowUp { escape_time: f64::NAN, requested: horizon.as_f64() });
        }
        states.push(st);
    }
    states.reverse();

    let times: Vec<S> = (0..=m).map(|i| if i == m { horizon } else { S::lit(i as f64) * h }).collect();
    let y: Vec<S> = states.iter().map(|s| s[0]).collect();
    let x: Vec<S> = states.iter().map(|s| shooting_value(s[0], s[1], eta)).collect();
    let theta: Vec<S> = states.iter().map(|s| theta_of(s[0], s[1], eta)).collect();
    let u0: Vec<S> = states.iter().map(|s| s[2]).collect();
    let u1: Vec<S> = states.iter().map(|s| s[3]).collect();
    let mut sol = MfgSolution { v, times, theta, u0, u1, y, x, tangent: false, residuals: Residuals::default() };
    sol.residuals = residuals(&sol, eta);
    Ok(sol)
}

/// Central-difference residuals in forward time.
pub fn residuals<S: Real>(sol: &MfgSolution<S>, eta: S) -> Residuals<S> {
    let n = sol.times.len();
    let mut out = Residuals { value: S::zero(), mass: S::zero(), consistency: S::zero() };
    for i in 0..n {
        out.consistency = out.consistency.max((sol.u1[i] - sol.u0[i] - sol.y[i]).abs());
    }
    for i in 1..n - 1 {
        let dt = sol.times[i + 1] - sol.times[i - 1];
        let (r0, r1) = value_rhs(sol.theta[i], sol.u0[i], sol.u1[i], eta);
        let d0 = (sol.u0[i + 1] - sol.u0[i - 1]) / dt;
        let d1 = (sol.u1[i + 1] - sol.u1[i - 1]) / dt;
        out.value = out.value.max((d0 + r0).abs()).max((d1 + r1).abs());
        // θ' has a kink where y changes sign; skip those stencils.
        if sol.y[i - 1] * sol.y[i + 1] > S::zero() {
            let yv = sol.y[i];
            let th = sol.theta[i];
            let rate_in = yv.positive_part() + eta;
            let rate_out = (-yv).positive_part() + eta;
            let dth = (sol.theta[i + 1] - sol.theta[i - 1]) / dt;
            out.mass = out.mass.max((dth - ((S::one() - th) * rate_in - th * rate_out)).abs());
        }
    }
    out
}

/// Dense brute-force count of sign changes of `v ↦ x_v(T) − (2θ̄ − 1)` on
/// `[−V, V]` at the given resolution, by direct ODE shooting.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport<S> {
    pub count: usize,
    pub v_max: S,
    pub resolution: S,
    /// Grid cells `[v_i, v_{i+1}]` containing a root (or exact-zero points).
    pub brackets: Vec<(S, S)>,
}

/// `V` with `escape_time(V) < T/4`: beyond `±V` the shooting map has
/// already blown up at `T`.
pub fn scan_bound<S: Real>(params: &ModelParams<S>) -> Result<S> {
    let quarter = params.horizon * S::lit(0.25);
    Ok(escape_velocity(quarter, params.eta)? * S::lit(1.01))
}

pub fn scan_count<S: Real>(params: &ModelParams<S>, resolution: S) -> Result<ScanReport<S>> {
    let v_bound = scan_bound(params)?;
    let half_cells = (v_bound / resolution).ceil().to_usize().unwrap_or(1);
    let v_max = resolution * S::lit(half_cells as f64);
    let target = params.target();
    let step = S::lit(0.01).min(params.horizon / S::lit(200.0));
    let values: Vec<S> = (0..=2 * half_cells)
        .into_par_iter()
        .map(|i| {
            let v = resolution * S::lit(i as f64 - half_cells as f64);
            shoot(v, params.eta, params.horizon, step) - target
        })
        .collect();
    let grid = |i: usize| resolution * S::lit(i as f64 - half_cells as f64);
    let mut brackets = Vec::new();
    let mut last: Option<(usize, S)> = None;
    for (i, &f) in values.iter().enumerate() {
        if f == S::zero() {
            brackets.push((grid(i), grid(i)));
            last = None;
            continue;
        }
        if let Some((j, g)) = last {
            if g * f < S::zero() {
                brackets.push((grid(j), grid(i)));
            }
        }
        last = Some((i, f));
    }
    Ok(ScanReport { count: brackets.len(), v_max, resolution, brackets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::eval_x;
    use crate::quadrature::zero_hit_time;

    fn params(eta: f64, t: f64, tb: f64) -> ModelParams<f64> {
        ModelParams::new(eta, t, tb).unwrap()
    }

    #[test]
    fn unique_regime() {
        let p = params(0.6, 1.0, 0.3);
        let r = enumerate(&p, EnumerateOptions::default()).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.solutions[0].v < 0.0);
        assert_eq!(r.count_kind, CountKind::ClosedForm);
    }

    #[test]
    fn count_at_half_examples() {
        assert_eq!(count_at_half(&params(0.0, 1.0, 0.5)).unwrap(), 1);
        assert_eq!(count_at_half(&params(0.0, 3.0, 0.5)).unwrap(), 3);
        assert_eq!(count_at_half(&params(0.0, 5.0, 0.5)).unwrap(), 5);
        assert_eq!(count_at_half(&params(0.7, 50.0, 0.5)).unwrap(), 1);
        assert!(count_at_half(&params(0.0, 1.0, 0.4)).is_err());
    }

    #[test]
    fn three_solutions_at_half() {
        let r = enumerate(&params(0.0, 3.0, 0.5), EnumerateOptions::default()).unwrap();
        assert_eq!(r.count, 3);
        assert_eq!(r.closed_form_count, Some(3));
        let vs: Vec<f64> = r.solutions.iter().map(|s| s.v).collect();
        assert_eq!(vs[1], 0.0);
        assert_eq!(vs[0], -vs[2]);
        assert_eq!(r.solutions[r.entropy_selected].v, 0.0);
        // Paired solutions mirror each other.
        let (a, b) = (&r.solutions[0], &r.solutions[2]);
        for i in (0..a.times.len()).step_by(101) {
            assert!((a.theta[i] + b.theta[i] - 1.0).abs() < 1e-12);
            assert!((a.u0[i] - b.u1[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_matches_enumeration() {
        for &(eta, t, tb) in &[(0.0, 3.0, 0.5), (0.0, 5.0, 0.5), (0.0, 6.0, 0.3), (0.1, 10.0, 0.55), (0.6, 2.0, 0.8)] {
            let p = params(eta, t, tb);
            let r = enumerate(&p, EnumerateOptions { mesh: Some(256), ..Default::default() }).unwrap();
            let scan = scan_count(&p, 1e-3).unwrap();
            assert_eq!(r.count, scan.count, "({eta}, {t}, {tb}): {:?}", scan.brackets);
        }
    }

    #[test]
    fn unique_above_threshold() {
        let p = params(0.0, 2.0, 1.0);
        let r = enumerate(&p, EnumerateOptions::default()).unwrap();
        assert_eq!(r.count, 1);
        assert!((r.solutions[0].theta[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn solutions_satisfy_the_system() {
        let p = params(0.1, 10.0, 0.55);
        let r = enumerate(&p, EnumerateOptions::default()).unwrap();
        assert!(r.count >= 3);
        for s in &r.solutions {
            assert!((s.theta[0] - 0.55).abs() < 1e-8, "{}", s.theta[0]);
            assert_eq!(*s.u0.last().unwrap(), 0.0);
            assert_eq!(*s.u1.last().unwrap(), 0.0);
            assert!(s.residuals.value < 1e-5, "{:?}", s.residuals);
            assert!(s.residuals.mass < 1e-5, "{:?}", s.residuals);
            assert!(s.residuals.consistency < 1e-10);
            assert!(s.theta.iter().all(|&t| (0.0..=1.0).contains(&t)));
            assert!((eval_x(s.v, 0.1, 10.0).unwrap() - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_selection_is_on_the_stopped_branch() {
        let p = params(0.0, 3.0, 0.6);
        let (v, sol) = entropy_select(&p).unwrap();
        assert!(v > 0.0);
        assert!(3.0 < zero_hit_time(1, v, 0.0).unwrap());
        let r = enumerate(&p, EnumerateOptions::default()).unwrap();
        assert!((r.solutions[r.entropy_selected].v - v).abs() < 1e-11);
        assert!((sol.theta[0] - 0.6).abs() < 1e-8);
        let (vn, _) = entropy_select(&params(0.0, 3.0, 0.4)).unwrap();
        assert!((vn + v).abs() < 1e-11);
        assert_eq!(entropy_select(&params(0.2, 3.0, 0.5)).unwrap().0, 0.0);
    }

    #[test]
    fn majority_side_grows() {
        let (_, sol) = entropy_select(&params(0.0, 1.0, 0.8)).unwrap();
        assert!(sol.y.iter().all(|&y| y >= 0.0));
        for w in sol.theta.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn symmetric_rest_solution() {
        let sol = recover_trajectories(0.0, &params(0.3, 2.0, 0.5)).unwrap();
        assert!(sol.theta.iter().all(|&t| t == 0.5));
        assert!(sol.u0.iter().zip(&sol.u1).all(|(a, b)| a == b));
        assert!(sol.y.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn stopped_branch_is_monotone() {
        let p = params(0.1, 4.0, 0.9);
        let table = PeriodTable::new(0.1).unwrap();
        let lo = table.zero_hit_velocity(1, 4.0).unwrap().unwrap();
        let hi = escape_velocity(4.0, 0.1).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let v = lo + (hi - lo) * i as f64 / 100.0;
            let x = shooting_residual(v, &p);
            assert!(x > prev, "at {v}");
            prev = x;
        }
    }
}
