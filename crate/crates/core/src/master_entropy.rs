//! Entropy solution `Y(x, t)` of
//!
//! ```text
//! ∂_t Y + ∂_x g(x, Y) = 0,   g(x, Y) = 2ηxY + xY|Y|/2 − Y²/2 − x²/2,
//! Y(x, 0) = 0,
//! ```
//!
//! built from characteristics stopped at their first zero hit:
//! `Y(x, t) = y_{v(x,t)}(t)` where `v(x, t)` is the unique velocity with
//! `x_v(t) = x` and `t < T₁(v)`. For `η < 1/2` a stationary shock sits at
//! `x = 0` from `t = T₁(0+)` on.

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::Orbit;
use crate::error::{Error, Result};
use crate::mfg_enumerator::{entropy_select_on, recover_on_mesh, MfgSolution};
use crate::quadrature::{escape_velocity, PeriodTable};
use crate::real::Real;
use crate::roots;
use crate::scalar_model::{regime, ModelParams};

/// `g(x, Y) = 2ηxY + xY|Y|/2 − Y²/2 − x²/2`.
pub fn flux<S: Real>(x: S, y: S, eta: S) -> S {
    let half = S::lit(0.5);
    S::lit(2.0) * eta * x * y + half * x * y * y.abs() - half * y * y - half * x * x
}

/// Value of the entropy solution at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EntropyValue<S> {
    Regular(S),
    /// On the shock: the two one-sided limits.
    Shock { minus: S, plus: S },
}

impl<S: Real> EntropyValue<S> {
    /// The regular value, or NaN on the shock.
    pub fn value_or_nan(&self) -> S {
        match *self {
            EntropyValue::Regular(y) => y,
            EntropyValue::Shock { .. } => S::nan(),
        }
    }
}

/// Period data for one `η`, shared by all inversions.
#[derive(Debug, Clone)]
pub struct EntropySolver<S> {
    eta: S,
    table: Option<PeriodTable<S>>,
}

impl<S: Real> EntropySolver<S> {
    pub fn new(eta: S) -> Result<Self> {
        if !(eta >= S::zero()) {
            return Err(Error::InvalidParameter(format!("eta must be >= 0, got {eta}")));
        }
        let table = if regime(eta).is_multiple() { Some(PeriodTable::new(eta)?) } else { None };
        Ok(Self { eta, table })
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    /// `T₁(0+)`, or `None` when no shock ever forms.
    pub fn shock_onset(&self) -> Option<S> {
        self.table.as_ref().map(|t| t.t1_limit_at_zero)
    }

    /// Stopped-branch data at a fixed time `t > 0`.
    pub fn branch(&self, t: S) -> Result<StoppedBranch<S>> {
        if !(t > S::zero()) {
            return Err(Error::Domain { op: "invert_velocity", detail: format!("t = {t} must be > 0") });
        }
        let lower = match &self.table {
            Some(table) => table.zero_hit_velocity(1, t)?.unwrap_or_else(S::zero),
            None => S::zero(),
        };
        let upper = escape_velocity(t, self.eta)?;
        let separatrix = match regime(self.eta).v_zero {
            Some(v0) => Some((v0, Orbit::new(v0, self.eta)?.x(t)?)),
            None => None,
        };
        Ok(StoppedBranch { eta: self.eta, t, lower, upper, separatrix })
    }

    pub fn invert_velocity(&self, x: S, t: S) -> Result<S> {
        if x == S::zero() {
            return Ok(S::zero());
        }
        self.branch(t)?.invert(x)
    }

    /// `(U(t,0,θ), U(t,1,θ))` from the equilibrium started at
    /// `v(2θ − 1, t)`, reusing this solver's period data.
    pub fn reconstruct_pair(&self, t: S, theta: S, mesh: Option<usize>) -> Result<(S, S)> {
        if t == S::zero() {
            return Ok((S::zero(), S::zero()));
        }
        let params = ModelParams::new(self.eta, t, theta)?;
        let v = self.invert_velocity(params.target(), t)?;
        let sol = recover_on_mesh(v, &params, mesh)?;
        Ok((sol.u0[0], sol.u1[0]))
    }

    pub fn eval_entropy_y(&self, x: S, t: S) -> Result<EntropyValue<S>> {
        if !(t > S::zero()) {
            return Ok(EntropyValue::Regular(S::zero()));
        }
        let branch = self.branch(t)?;
        if x == S::zero() {
            return Ok(if branch.lower > S::zero() {
                let (minus, plus) = branch.one_sided_limits()?;
                EntropyValue::Shock { minus, plus }
            } else {
                EntropyValue::Regular(S::zero())
            });
        }
        Ok(EntropyValue::Regular(branch.value(x)?))
    }
}

/// Characteristics at time `t` on the stopped branch `t < T₁(v)`.
#[derive(Debug, Clone)]
pub struct StoppedBranch<S> {
    eta: S,
    t: S,
    /// `w₁(t)` with `T₁(w₁) = t`, or 0 before the shock onset.
    pub lower: S,
    /// Speed escaping exactly at `t`.
    pub upper: S,
    /// `(v₀, x_{v₀}(t))` when `η < 1/2`.
    pub separatrix: Option<(S, S)>,
}

impl<S: Real> StoppedBranch<S> {
    fn x_of(&self, v: S) -> S {
        match Orbit::new(v, self.eta).and_then(|o| o.x(self.t)) {
            Ok(x) => x,
            Err(Error::BlowUp { .. }) => S::infinity(),
            Err(_) => S::nan(),
        }
    }

    fn solve(&self, x: S, lo: S, hi: S) -> Result<S> {
        let f = |v: S| if v <= self.lower { -x } else { self.x_of(v) - x };
        roots::brent(f, lo, hi, S::epsilon() * hi.max(S::one()))
    }

    /// `v(x, t)`: the stopped-branch velocity with `x_v(t) = x`.
    pub fn invert(&self, x: S) -> Result<S> {
        if x == S::zero() {
            return Ok(S::zero());
        }
        if x < S::zero() {
            return Ok(-self.invert(-x)?);
        }
        let (lo, hi) = match self.separatrix {
            Some((v0, xs)) if v0 > self.lower => {
                if x > xs {
                    (v0, self.upper)
                } else if x < xs {
                    (self.lower, v0)
                } else {
                    return Ok(v0);
                }
            }
            _ => (self.lower, self.upper),
        };
        self.solve(x, lo, hi)
    }

    /// `y_v(t)` for a velocity on this branch.
    pub fn height(&self, v: S) -> Result<S> {
        Ok(Orbit::new(v, self.eta)?.state(self.t)?.0)
    }

    pub fn value(&self, x: S) -> Result<S> {
        self.height(self.invert(x)?)
    }

    /// `(Y₋, Y₊)` at `x = 0`: the heights of the stopped curves ending at
    /// the shock, `y_{∓w₁}(t)`.
    pub fn one_sided_limits(&self) -> Result<(S, S)> {
        if self.lower == S::zero() {
            return Ok((S::zero(), S::zero()));
        }
        Ok((self.height(-self.lower)?, self.height(self.lower)?))
    }

    /// `v(x, t)` for ascending `xs > 0`, warm-starting each bracket from the
    /// previous root.
    pub fn invert_ascending(&self, xs: &[S]) -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(xs.len());
        let mut prev = (self.lower, S::zero());
        let mut step = S::zero();
        for &x in xs {
            let lo = prev.0;
            let mut hi = if step > S::zero() { (lo + S::lit(1.5) * step).min(self.upper) } else { self.upper };
            if hi < self.upper && !(self.x_of(hi) > x) {
                hi = self.upper;
            }
            let v = self.solve(x, lo, hi)?;
            step = v - prev.0;
            prev = (v, x);
            out.push(v);
        }
        Ok(out)
    }
}

pub fn invert_velocity<S: Real>(x: S, t: S, eta: S) -> Result<S> {
    EntropySolver::new(eta)?.invert_velocity(x, t)
}

pub fn eval_entropy_y<S: Real>(x: S, t: S, eta: S) -> Result<EntropyValue<S>> {
    EntropySolver::new(eta)?.eval_entropy_y(x, t)
}

/// Jump conditions of the stationary shock at `x = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShockDiagnostics<S> {
    pub t: S,
    pub y_plus: S,
    pub y_minus: S,
    /// `[g(0,Y₊) − g(0,Y₋)]/(Y₊ − Y₋)` minus the shock speed 0.
    pub rh_residual: S,
    /// `min_c (g(0,c) − g(0,Y₋))/(c − Y₋)` over `c ∈ (Y₋, Y₊)`.
    pub lax_margin_left: S,
    /// `min_c −(g(0,c) − g(0,Y₊))/(c − Y₊)` over `c ∈ (Y₋, Y₊)`.
    pub lax_margin_right: S,
}

const LAX_GRID: usize = 201;

pub fn shock_diagnostics<S: Real>(solver: &EntropySolver<S>, t: S) -> Result<ShockDiagnostics<S>> {
    let Some(onset) = solver.shock_onset() else {
        return Err(Error::Precondition(format!("no shock for eta = {} >= 1/2", solver.eta())));
    };
    if !(t > onset) {
        return Err(Error::Precondition(format!("t = {t} is not past the shock onset {onset}")));
    }
    let (y_minus, y_plus) = solver.branch(t)?.one_sided_limits()?;
    let eta = solver.eta();
    let g = |y: S| flux(S::zero(), y, eta);
    let rh_residual = (g(y_plus) - g(y_minus)) / (y_plus - y_minus);
    let mut left = S::infinity();
    let mut right = S::infinity();
    for k in 1..=LAX_GRID {
        let c = y_minus + (y_plus - y_minus) * S::lit(k as f64 / (LAX_GRID + 1) as f64);
        left = left.min((g(c) - g(y_minus)) / (c - y_minus));
        right = right.min(-(g(c) - g(y_plus)) / (c - y_plus));
    }
    Ok(ShockDiagnostics { t, y_plus, y_minus, rh_residual, lax_margin_left: left, lax_margin_right: right })
}

/// Separation `Y(δ, t) − Y(−δ, t)` of the numerical one-sided values.
pub fn one_sided_gap<S: Real>(solver: &EntropySolver<S>, t: S, delta: S) -> Result<S> {
    let b = solver.branch(t)?;
    Ok(b.value(delta)? - b.value(-delta)?)
}

/// First `t ≤ t_max` at which the one-sided values at `x = ±δ` separate by
/// more than `tol`; located by a scan on `n_scan` times and bisection.
pub fn detect_shock_onset<S: Real>(solver: &EntropySolver<S>, t_max: S, delta: S, tol: S) -> Result<Option<S>> {
    let n_scan = 300;
    let separated = |t: S| one_sided_gap(solver, t, delta).map(|g| g > tol);
    let mut prev = S::zero();
    for i in 1..=n_scan {
        let t = t_max * S::lit(i as f64 / n_scan as f64);
        if separated(t)? {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > S::lit(1e-7) * t_max {
                let mid = S::lit(0.5) * (lo + hi);
                if mid > S::zero() && separated(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev = t;
    }
    Ok(None)
}

/// `Y` sampled on `t_grid × x_grid`, rows indexed by time.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyField<S> {
    pub eta: S,
    pub t_grid: Vec<S>,
    pub x_grid: Vec<S>,
    /// `y[j][i] = Y(x_i, t_j)`; NaN on the shock.
    pub y: Vec<Vec<S>>,
    pub v_map: Vec<Vec<S>>,
    pub shock_onset: Option<S>,
    /// Jump data for every time row past the onset.
    pub shocks: Vec<ShockDiagnostics<S>>,
}

/// Fills the entropy solution on `n_t` times `t_max·j/n_t` (`j = 1..n_t`)
/// and `n_x` equispaced points of `[−1, 1]`.
pub fn build_field<S: Real>(eta: S, t_max: S, n_t: usize, n_x: usize) -> Result<EntropyField<S>> {
    if n_t < 1 || n_x < 2 {
        return Err(Error::InvalidParameter(format!("grid needs n_t >= 1 and n_x >= 2, got {n_t} x {n_x}")));
    }
    let solver = EntropySolver::new(eta)?;
    let t_grid: Vec<S> = (1..=n_t).map(|j| t_max * S::lit(j as f64 / n_t as f64)).collect();
    // Mirrored so that x_grid[n_x − 1 − i] = −x_grid[i] exactly.
    let half = n_x / 2;
    let positive: Vec<S> = (0..half)
        .map(|k| S::lit((n_x - 1 - 2 * (half - 1 - k)) as f64 / (n_x - 1) as f64))
        .collect();
    let mut x_grid: Vec<S> = positive.iter().rev().map(|&x| -x).collect();
    if n_x % 2 == 1 {
        x_grid.push(S::zero());
    }
    x_grid.extend(positive.iter().copied());
    let onset = solver.shock_onset();

    let rows: Vec<(Vec<S>, Vec<S>, Option<ShockDiagnostics<S>>)> = t_grid
        .par_iter()
        .map(|&t| {
            let branch = solver.branch(t)?;
            let vs = branch.invert_ascending(&positive)?;
            let ys = vs.iter().map(|&v| branch.height(v)).collect::<Result<Vec<S>>>()?;
            let shocked = branch.lower > S::zero();
            let mut y_row = Vec::with_capacity(n_x);
            let mut v_row = Vec::with_capacity(n_x);
            y_row.extend(ys.iter().rev().map(|&y| -y));
            v_row.extend(vs.iter().rev().map(|&v| -v));
            if n_x % 2 == 1 {
                y_row.push(if shocked { S::nan() } else { S::zero() });
                v_row.push(S::zero());
            }
            y_row.extend(ys.iter().copied());
            v_row.extend(vs.iter().copied());
            let diag = if shocked { Some(shock_diagnostics(&solver, t)?) } else { None };
            Ok((y_row, v_row, diag))
        })
        .collect::<Result<_>>()?;

    let mut y = Vec::with_capacity(n_t);
    let mut v_map = Vec::with_capacity(n_t);
    let mut shocks = Vec::new();
    for (yr, vr, d) in rows {
        y.push(yr);
        v_map.push(vr);
        shocks.extend(d);
    }
    Ok(EntropyField { eta, t_grid, x_grid, y, v_map, shock_onset: onset, shocks })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualAudit<S> {
    pub max_residual: S,
    pub dt: S,
    pub dx: S,
    pub points: usize,
}

/// Max centered-difference residual of the conservation law over grid
/// points with `|x| > exclusion`. The initial row `Y(·, 0) = 0` is implied.
pub fn pde_residual_audit<S: Real>(field: &EntropyField<S>, exclusion: S) -> ResidualAudit<S> {
    let nt = field.t_grid.len();
    let nx = field.x_grid.len();
    let dt = field.t_grid[0];
    let dx = field.x_grid[1] - field.x_grid[0];
    let zero_row = vec![S::zero(); nx];
    let row = |j: isize| if j < 0 { &zero_row } else { &field.y[j as usize] };
    let mut max_residual = S::zero();
    let mut points = 0;
    for j in 0..nt.saturating_sub(1) {
        for i in 1..nx - 1 {
            let x = field.x_grid[i];
            if x.abs() <= exclusion {
                continue;
            }
            let (prev, cur, next) = (row(j as isize - 1), row(j as isize), row(j as isize + 1));
            let dyt = (next[i] - prev[i]) / (S::lit(2.0) * dt);
            let gl = flux(field.x_grid[i - 1], cur[i - 1], field.eta);
            let gr = flux(field.x_grid[i + 1], cur[i + 1], field.eta);
            let r = (dyt + (gr - gl) / (S::lit(2.0) * dx)).abs();
            if r.is_finite() {
                max_residual = max_residual.max(r);
                points += 1;
            }
        }
    }
    ResidualAudit { max_residual, dt, dx, points }
}

/// `U(t, i, θ)`: the entropy-selected equilibrium with horizon `t` and
/// initial mass `θ`, evaluated at its initial time.
pub fn reconstruct_u<S: Real>(t: S, i: usize, theta: S, eta: S) -> Result<S> {
    if i > 1 {
        return Err(Error::InvalidParameter(format!("state must be 0 or 1, got {i}")));
    }
    if t == S::zero() {
        return Ok(S::zero());
    }
    let (_, sol) = entropy_select_on(&ModelParams::new(eta, t, theta)?, None)?;
    Ok(initial_value(&sol, i))
}

fn initial_value<S: Real>(sol: &MfgSolution<S>, i: usize) -> S {
    if i == 0 {
        sol.u0[0]
    } else {
        sol.u1[0]
    }
}

/// `(U(t,0,θ), U(t,1,θ))` from a single equilibrium solve.
pub fn reconstruct_u_pair<S: Real>(t: S, theta: S, eta: S, mesh: Option<usize>) -> Result<(S, S)> {
    if t == S::zero() {
        return Ok((S::zero(), S::zero()));
    }
    let (_, sol) = entropy_select_on(&ModelParams::new(eta, t, theta)?, mesh)?;
    Ok((sol.u0[0], sol.u1[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveEnd {
    Horizon,
    /// Stopped at `T₁(v)`, where it enters the shock.
    Shock,
}

/// One characteristic `t ↦ (x_v(t), y_v(t))` of the fan.
#[derive(Debug, Clone, Serialize)]
pub struct FanCurve<S> {
    pub v: S,
    pub points: Vec<(S, S, S)>,
    pub end: CurveEnd,
}

/// Characteristics for `n_curves` velocities reaching `x ∈ [−1, 1]` at
/// `t_max`, each stopped at the shock, sampled at `n_points` times.
pub fn characteristic_fan<S: Real>(eta: S, t_max: S, n_curves: usize, n_points: usize) -> Result<Vec<FanCurve<S>>> {
    let solver = EntropySolver::new(eta)?;
    let v_edge = solver.invert_velocity(S::one(), t_max)?;
    let n_curves = n_curves.max(2);
    (0..n_curves)
        .into_par_iter()
        .map(|k| {
            let v = v_edge * S::lit(2.0 * k as f64 / (n_curves - 1) as f64 - 1.0);
            let orbit = Orbit::new(v, eta)?;
            let stop = orbit.first_zero_hit();
            let (t_end, end) = if stop < t_max { (stop, CurveEnd::Shock) } else { (t_max, CurveEnd::Horizon) };
            let points = (0..=n_points)
                .map(|j| {
                    let t = t_end * S::lit(j as f64 / n_points.max(1) as f64);
                    let (y, _) = orbit.state(t)?;
                    Ok((t, orbit.x(t)?, y))
                })
                .collect::<Result<_>>()?;
            Ok(FanCurve { v, points, end })
        })
        .collect()
}
