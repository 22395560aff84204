//! Time-domain characteristics `y_v(t)` and the shooting map `x_v(t)`.
//!
//! Two independent evaluations are provided. [`Orbit`] inverts the
//! quadratures of [`crate::quadrature`]; [`integrate_path`], [`shoot`] and
//! [`first_zero_of_x`] integrate `y'' = G'(y)/2` directly with a fixed-step
//! fourth-order Runge–Kutta scheme.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{self, Escape, Oscillation, Separatrix};
use crate::real::Real;
use crate::roots;
use crate::scalar_model::regime;

/// `|y|` beyond which a non-oscillatory path is declared escaped.
const BLOW_UP_HEIGHT: f64 = 40.0;

/// `y'' = −y + y³/2 + 3η|y|y + 4η²y`, the odd extension of `G'(y)/2`.
#[inline]
pub fn acceleration<S: Real>(y: S, eta: S) -> S {
    y * (S::lit(0.5) * y * y + S::lit(3.0) * eta * y.abs() + S::lit(4.0) * eta * eta - S::one())
}

/// `x = ½ y|y| + 2ηy + ẏ`.
#[inline]
pub fn shooting_value<S: Real>(y: S, ydot: S, eta: S) -> S {
    S::lit(0.5) * y * y.abs() + S::lit(2.0) * eta * y + ydot
}

#[inline]
fn rk4_step<S: Real>(y: S, yd: S, h: S, eta: S) -> (S, S) {
    let half = S::lit(0.5);
    let k1y = yd;
    let k1v = acceleration(y, eta);
    let k2y = yd + half * h * k1v;
    let k2v = acceleration(y + half * h * k1y, eta);
    let k3y = yd + half * h * k2v;
    let k3v = acceleration(y + half * h * k2y, eta);
    let k4y = yd + h * k3v;
    let k4v = acceleration(y + h * k3y, eta);
    let sixth = h / S::lit(6.0);
    (
        y + sixth * (k1y + S::lit(2.0) * (k2y + k3y) + k4y),
        yd + sixth * (k1v + S::lit(2.0) * (k2v + k3v) + k4v),
    )
}

/// Step size at most `step` that divides `span` evenly.
fn mesh<S: Real>(span: S, step: S) -> (usize, S) {
    let n = (span / step).ceil().to_usize().unwrap_or(1).max(1);
    (n, span / S::lit(n as f64))
}

#[derive(Debug, Clone)]
enum OrbitKind<S> {
    Rest,
    Oscillation(Oscillation<S>),
    Separatrix(Separatrix<S>),
    Escape(Escape<S>),
}

/// Semi-analytic characteristic: state at any time from the quadratures.
#[derive(Debug, Clone)]
pub struct Orbit<S> {
    v: S,
    eta: S,
    kind: OrbitKind<S>,
}

impl<S: Real> Orbit<S> {
    pub fn new(v: S, eta: S) -> Result<Self> {
        let reg = regime(eta);
        let kind = if v == S::zero() {
            OrbitKind::Rest
        } else if reg.is_oscillatory(v) {
            match Oscillation::new(v, eta) {
                Ok(o) => OrbitKind::Oscillation(o),
                // Within rounding of v₀ the turning point merges with y*.
                Err(_) => OrbitKind::Separatrix(Separatrix::new(eta, v < S::zero())?),
            }
        } else if reg.v_zero == Some(v.abs()) {
            OrbitKind::Separatrix(Separatrix::new(eta, v < S::zero())?)
        } else {
            match Escape::new(v, eta) {
                Ok(e) => OrbitKind::Escape(e),
                Err(_) if reg.is_multiple() => OrbitKind::Separatrix(Separatrix::new(eta, v < S::zero())?),
                Err(e) => return Err(e),
            }
        };
        Ok(Self { v, eta, kind })
    }

    pub fn v(&self) -> S {
        self.v
    }

    pub fn is_oscillatory(&self) -> bool {
        matches!(self.kind, OrbitKind::Oscillation(_))
    }

    pub fn oscillation(&self) -> Option<&Oscillation<S>> {
        match &self.kind {
            OrbitKind::Oscillation(o) => Some(o),
            _ => None,
        }
    }

    pub fn quarter_period(&self) -> Option<S> {
        self.oscillation().map(Oscillation::quarter_period)
    }

    /// Blow-up time; `None` for bounded orbits.
    pub fn escape_time(&self) -> Option<S> {
        match &self.kind {
            OrbitKind::Escape(e) => Some(e.escape_time()),
            _ => None,
        }
    }

    /// `T₁(v)`, infinite off the oscillatory band.
    pub fn first_zero_hit(&self) -> S {
        match &self.kind {
            OrbitKind::Oscillation(o) => o.zero_hit_time(1),
            _ => S::infinity(),
        }
    }

    /// `(y_v(t), ẏ_v(t))`.
    pub fn state(&self, t: S) -> Result<(S, S)> {
        match &self.kind {
            OrbitKind::Rest => Ok((S::zero(), S::zero())),
            OrbitKind::Oscillation(o) => o.state(t),
            OrbitKind::Separatrix(s) => s.state(t),
            OrbitKind::Escape(e) => e.state(t),
        }
    }

    /// `x_v(t)`.
    pub fn x(&self, t: S) -> Result<S> {
        let (y, yd) = self.state(t)?;
        Ok(shooting_value(y, yd, self.eta))
    }
}

/// One sample of a characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample<S> {
    pub t: S,
    pub y: S,
    pub ydot: S,
    pub x: S,
}

/// A characteristic sampled on a mesh, computed by direct integration.
#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicPath<S> {
    pub v: S,
    pub eta: S,
    pub samples: Vec<PathSample<S>>,
    pub oscillatory: bool,
    /// Turning time of the first quarter, located on the integrated path.
    pub period_quarter: Option<S>,
    /// Blow-up time, when the orbit is unbounded.
    pub escape: Option<S>,
}

impl<S: Real> CharacteristicPath<S> {
    /// `max |ẏ² − G(y) − v²|` over the samples.
    pub fn energy_drift(&self) -> S {
        let v2 = self.v * self.v;
        self.samples
            .iter()
            .map(|s| (s.ydot * s.ydot - crate::scalar_model::potential(s.y, self.eta) - v2).abs())
            .fold(S::zero(), S::max)
    }

    /// State at an arbitrary time by a partial RK4 step from the nearest
    /// earlier sample.
    pub fn state_at(&self, t: S) -> (S, S) {
        let i = self.samples.partition_point(|s| s.t <= t).max(1) - 1;
        let s = &self.samples[i];
        if t == s.t {
            return (s.y, s.ydot);
        }
        rk4_step(s.y, s.ydot, t - s.t, self.eta)
    }
}

/// First-quarter table of an oscillatory orbit on a uniform mesh.
struct QuarterTable<S> {
    h: S,
    eta: S,
    nodes: Vec<(S, S)>,
    turning_time: S,
}

impl<S: Real> QuarterTable<S> {
    fn build(a: S, eta: S, h: S) -> Result<Self> {
        let mut nodes = vec![(S::zero(), a)];
        let limit = 50_000_000usize;
        loop {
            let &(y, yd) = nodes.last().unwrap();
            let (y1, yd1) = rk4_step(y, yd, h, eta);
            if yd1 <= S::zero() {
                let delta = roots::brent(|d| rk4_step(y, yd, d, eta).1, S::zero(), h, S::epsilon() * h)?;
                let n = nodes.len() - 1;
                return Ok(Self { h, eta, turning_time: S::lit(n as f64) * h + delta, nodes });
            }
            nodes.push((y1, yd1));
            if nodes.len() > limit {
                return Err(Error::NoConvergence { routine: "quarter_table", lo: 0.0, hi: (h * S::lit(limit as f64)).as_f64() });
            }
        }
    }

    fn state(&self, s: S) -> (S, S) {
        let s = s.max(S::zero()).min(self.turning_time);
        let i = (s / self.h).floor().to_usize().unwrap_or(0).min(self.nodes.len() - 1);
        let (y, yd) = self.nodes[i];
        let ds = s - S::lit(i as f64) * self.h;
        if ds == S::zero() {
            (y, yd)
        } else {
            rk4_step(y, yd, ds, self.eta)
        }
    }

    /// Four-quarter extension from the tabulated first quarter.
    fn extended(&self, t: S) -> (S, S) {
        let tq = self.turning_time;
        let period = S::lit(4.0) * tq;
        let tau = t - period * (t / period).floor();
        let two = S::lit(2.0);
        if tau < tq {
            self.state(tau)
        } else if tau < two * tq {
            let (y, yd) = self.state(two * tq - tau);
            (y, -yd)
        } else if tau < S::lit(3.0) * tq {
            let (y, yd) = self.state(tau - two * tq);
            (-y, -yd)
        } else {
            let (y, yd) = self.state(period - tau);
            (-y, yd)
        }
    }
}

/// Integrates the characteristic with `y(0) = 0`, `ẏ(0) = v` on `[0, t_max]`.
///
/// Oscillatory orbits are integrated over one quarter and extended
/// periodically; mesh points are added at every zero crossing.
pub fn integrate_path<S: Real>(v: S, eta: S, t_max: S, step: S) -> Result<CharacteristicPath<S>> {
    if !(t_max > S::zero()) || !(step > S::zero()) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} and step = {step} must be > 0")));
    }
    let (n, h) = mesh(t_max, step);
    let times = (0..=n).map(|i| if i == n { t_max } else { S::lit(i as f64) * h });
    let reg = regime(eta);

    if v == S::zero() {
        let samples = times.map(|t| PathSample { t, y: S::zero(), ydot: S::zero(), x: S::zero() }).collect();
        return Ok(CharacteristicPath { v, eta, samples, oscillatory: false, period_quarter: None, escape: None });
    }

    if reg.is_oscillatory(v) {
        let table = QuarterTable::build(v.abs(), eta, h)?;
        let sign = v.signum();
        let tq = table.turning_time;
        let mut ts: Vec<S> = times.collect();
        let mut k = 1;
        while S::lit(2.0 * k as f64) * tq < t_max {
            ts.push(S::lit(2.0 * k as f64) * tq);
            k += 1;
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        let samples = ts
            .into_iter()
            .map(|t| {
                let (y, yd) = table.extended(t);
                let (y, ydot) = (sign * y, sign * yd);
                PathSample { t, y, ydot, x: shooting_value(y, ydot, eta) }
            })
            .collect();
        return Ok(CharacteristicPath { v, eta, samples, oscillatory: true, period_quarter: Some(tq), escape: None });
    }

    let escape = match quadrature::escape_time(v, eta) {
        Ok(e) if e.is_finite() => Some(e),
        _ => None,
    };
    let mut samples = Vec::with_capacity(n + 1);
    let (mut y, mut yd) = (S::zero(), v);
    samples.push(PathSample { t: S::zero(), y, ydot: yd, x: v });
    for (i, t) in times.enumerate().skip(1) {
        let dt = t - S::lit((i - 1) as f64) * h;
        (y, yd) = rk4_step(y, yd, dt, eta);
        if !(y.abs() <= S::lit(BLOW_UP_HEIGHT)) {
            return Err(Error::BlowUp {
                escape_time: escape.map_or(f64::INFINITY, |e| e.as_f64()),
                requested: t_max.as_f64(),
            });
        }
        samples.push(PathSample { t, y, ydot: yd, x: shooting_value(y, yd, eta) });
    }
    Ok(CharacteristicPath { v, eta, samples, oscillatory: false, period_quarter: None, escape })
}

/// `x_v(t)` from the semi-analytic orbit.
pub fn eval_x<S: Real>(v: S, eta: S, t: S) -> Result<S> {
    if t < S::zero() {
        return Err(Error::Domain { op: "eval_x", detail: format!("t = {t} < 0") });
    }
    Orbit::new(v, eta)?.x(t)
}

/// First time `x_v` reaches 0, by event detection on the integrated path.
/// `+∞` for orbits that never oscillate.
pub fn first_zero_of_x<S: Real>(v: S, eta: S) -> Result<S> {
    if v == S::zero() {
        return Err(Error::Domain { op: "first_zero_of_x", detail: "x_0 vanishes identically".into() });
    }
    if !regime(eta).is_oscillatory(v) {
        return Ok(S::infinity());
    }
    let a = v.abs();
    let h = S::lit(1e-3);
    let (mut y, mut yd) = (S::zero(), a);
    let mut t = S::zero();
    let x_at = |y: S, yd: S, d: S| {
        let (y1, yd1) = rk4_step(y, yd, d, eta);
        shooting_value(y1, yd1, eta)
    };
    for _ in 0..100_000_000usize {
        let (y1, yd1) = rk4_step(y, yd, h, eta);
        if shooting_value(y1, yd1, eta) <= S::zero() {
            let delta = roots::brent(|d| x_at(y, yd, d), S::zero(), h, S::epsilon() * h)?;
            return Ok(t + delta);
        }
        if y1 < S::zero() {
            return Err(Error::NoConvergence { routine: "first_zero_of_x", lo: 0.0, hi: t.as_f64() });
        }
        (y, yd) = (y1, yd1);
        t = t + h;
    }
    Err(Error::NoConvergence { routine: "first_zero_of_x", lo: 0.0, hi: t.as_f64() })
}

/// `x_v(horizon)` by straight RK4 integration at step at most `step`,
/// splitting steps at sign changes of `y`. Escaping paths return `±∞`.
pub fn shoot<S: Real>(v: S, eta: S, horizon: S, step: S) -> S {
    if v == S::zero() {
        return S::zero();
    }
    let (n, h) = mesh(horizon, step);
    let (mut y, mut yd) = (S::zero(), v);
    for _ in 0..n {
        let (y1, yd1) = rk4_step(y, yd, h, eta);
        if y != S::zero() && y1 != S::zero() && y.signum() != y1.signum() {
            // Land exactly on the kink of |y| and restart from there.
            let d = match roots::brent(|d| rk4_step(y, yd, d, eta).0, S::zero(), h, S::epsilon() * h) {
                Ok(d) => d,
                Err(_) => h,
            };
            let (_, ydc) = rk4_step(y, yd, d, eta);
            (y, yd) = rk4_step(S::zero(), ydc, h - d, eta);
        } else {
            (y, yd) = (y1, yd1);
        }
        if !(y.abs() <= S::lit(BLOW_UP_HEIGHT)) {
            return if v > S::zero() { S::infinity() } else { S::neg_infinity() };
        }
    }
    shooting_value(y, yd, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_model::{potential, smallest_positive_root};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rest_path() {
        let p = integrate_path(0.0, 0.3, 2.0, 0.01).unwrap();
        assert!(p.samples.iter().all(|s| s.y == 0.0 && s.x == 0.0));
        assert_eq!(eval_x(0.0, 0.2, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn turning_point_at_quarter_period() {
        // At η = 0, y(v)² = 2 − 2√(1 − v²); for v = 0.5 that is 2 − √3.
        let y_turn = (2.0 - 3f64.sqrt()).sqrt();
        let tq = quadrature::quarter_period(0.5f64, 0.0).unwrap();
        let p = integrate_path(0.5, 0.0, 2.0, 1e-3).unwrap();
        assert!((p.period_quarter.unwrap() - tq).abs() < 1e-10);
        let (y, yd) = p.state_at(tq);
        assert!((y - y_turn).abs() < 1e-10, "{y} {yd}");
        assert!(yd.abs() < 1e-9);
        let (y, yd) = Orbit::new(0.5, 0.0).unwrap().state(tq).unwrap();
        assert!((y - y_turn).abs() < 1e-12 && yd.abs() < 1e-12);
    }

    #[test]
    fn negation_symmetry() {
        let a = integrate_path(0.5, 0.0, 10.0, 1e-3).unwrap();
        let b = integrate_path(-0.5, 0.0, 10.0, 1e-3).unwrap();
        for (p, q) in a.samples.iter().zip(&b.samples) {
            assert_eq!(p.y, -q.y);
            assert_eq!(p.x, -q.x);
        }
    }

    #[test]
    fn x_starts_at_v() {
        for &v in &[-2.0, -0.3, 0.4, 0.99, 1.7] {
            assert_relative_eq!(eval_x(v, 0.1, 0.0).unwrap(), v, max_relative = 1e-15);
        }
    }

    #[test]
    fn zero_hit_geometry() {
        for &(v, eta) in &[(0.5f64, 0.0f64), (0.3, 0.1), (0.2, 0.3)] {
            let t1 = quadrature::zero_hit_time(1, v, eta).unwrap();
            let orbit = Orbit::new(v, eta).unwrap();
            let (y, yd) = orbit.state(t1).unwrap();
            assert!(orbit.x(t1).unwrap().abs() < 1e-12);
            assert!((y.abs() - v).abs() < 1e-12);
            assert!(y.signum() == -yd.signum());
        }
    }

    #[test]
    fn separatrix_limit_is_threshold() {
        let eta = 0.1;
        let v0 = regime(eta).v0();
        let mut prev = f64::NEG_INFINITY;
        for &t in &[0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
            let x = eval_x(v0, eta, t).unwrap();
            assert!(x > prev);
            prev = x;
        }
        assert!((prev - regime(eta).x_threshold).abs() < 1e-10);
    }

    #[test]
    fn event_detection_matches_quadrature() {
        for &(v, eta) in &[(0.5f64, 0.0f64), (0.1, 0.0), (0.6, 0.1), (0.3, 0.25)] {
            let ode = first_zero_of_x(v, eta).unwrap();
            let quad = quadrature::zero_hit_time(1, v, eta).unwrap();
            assert!((ode - quad).abs() < 1e-7, "{v} {eta}: {ode} vs {quad}");
        }
        assert_eq!(first_zero_of_x(2.0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(first_zero_of_x(1.0, 0.6).unwrap(), f64::INFINITY);
    }

    #[test]
    fn escape_is_reported() {
        let esc = quadrature::escape_time(2.0, 0.0).unwrap();
        match integrate_path(2.0, 0.0, esc + 1.0, 1e-3) {
            Err(Error::BlowUp { escape_time, .. }) => assert_relative_eq!(escape_time, esc),
            other => panic!("expected blow-up, got {other:?}"),
        }
        assert_eq!(shoot(2.0, 0.0, esc + 1.0, 1e-3), f64::INFINITY);
        assert_eq!(shoot(-2.0, 0.0, esc + 1.0, 1e-3), f64::NEG_INFINITY);
    }

    #[test]
    fn implicit_time_matches_ode() {
        let esc = quadrature::escape_time(2.0, 0.0).unwrap();
        let t = quadrature::implicit_time(3.0, 2.0, 0.0).unwrap();
        assert!(t < esc);
        let p = integrate_path(2.0f64, 0.0, t, 1e-4).unwrap();
        assert!((p.samples.last().unwrap().y - 3.0).abs() < 1e-8);
    }

    #[test]
    fn energy_is_conserved() {
        for &(v, eta) in &[(0.5f64, 0.0f64), (0.95, 0.0), (0.7, 0.1), (0.3, 0.4), (0.4, 0.6)] {
            let t_max = match quadrature::escape_time(v, eta) {
                Ok(e) if e.is_finite() => 20.0f64.min(0.5 * e),
                _ => 20.0,
            };
            let p = integrate_path(v, eta, t_max, 1e-3).unwrap();
            assert!(p.energy_drift() < 1e-8, "{v} {eta}: {}", p.energy_drift());
        }
    }

    #[test]
    fn periodic_extension_matches_orbit() {
        let (v, eta) = (0.6f64, 0.1f64);
        let p = integrate_path(v, eta, 15.0, 1e-3).unwrap();
        let orbit = Orbit::new(v, eta).unwrap();
        for s in p.samples.iter().step_by(97) {
            let (y, _) = orbit.state(s.t).unwrap();
            assert!((s.y - y).abs() < 1e-7, "t {}: {} vs {}", s.t, s.y, y);
        }
        // Zero crossings are on the mesh.
        let tq = p.period_quarter.unwrap();
        assert!(p.samples.iter().any(|s| (s.t - 2.0 * tq).abs() < 1e-15));
    }

    #[test]
    fn shoot_agrees_with_orbit() {
        for &(v, eta) in &[(0.5f64, 0.0f64), (-0.7, 0.1), (1.2, 0.0), (0.2, 0.8)] {
            let t = 4.0f64.min(0.8 * quadrature::escape_time(v, eta).unwrap_or(f64::INFINITY));
            let a = shoot(v, eta, t, 1e-3);
            let b = eval_x(v, eta, t).unwrap();
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{v} {eta}: {a} vs {b}");
        }
    }

    #[test]
    fn single_precision_orbit() {
        let x = eval_x(0.5f32, 0.0, 1.0).unwrap();
        let x64 = eval_x(0.5f64, 0.0, 1.0).unwrap();
        assert!((x as f64 - x64).abs() < 1e-4);
    }

    #[test]
    fn root_and_orbit_height_agree() {
        let orbit = Orbit::new(0.3f64, 0.2).unwrap();
        let o = orbit.oscillation().unwrap();
        assert_eq!(o.turning_point(), smallest_positive_root(0.3, 0.2).unwrap());
        let g = potential(o.turning_point(), 0.2);
        assert!((g + 0.09).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn x_is_odd(v in -2.0f64..2.0, eta in 0.0f64..1.0, s in 0.0f64..1.0) {
            let t = 3.0 * s * quadrature::escape_time(v, eta).map_or(1.0, |e| (0.9 * e).min(1.0));
            let a = eval_x(v, eta, t);
            let b = eval_x(-v, eta, t);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert_eq!(a, -b);
            }
        }

        #[test]
        fn ordering_of_stopped_curves(f1 in 0.05f64..0.9, gap in 0.01f64..0.09, eta in 0.0f64..0.45, s in 0.0f64..1.0) {
            let v0 = regime(eta).v0();
            let (v1, v2) = (f1 * v0, (f1 + gap) * v0);
            let t = s * quadrature::zero_hit_time(1, v1, eta).unwrap();
            let (o1, o2) = (Orbit::new(v1, eta).unwrap(), Orbit::new(v2, eta).unwrap());
            prop_assert!(o1.state(t).unwrap().0 <= o2.state(t).unwrap().0 + 1e-12);
            prop_assert!(o1.x(t).unwrap() < o2.x(t).unwrap());
        }

        #[test]
        fn periodicity(frac in 0.05f64..0.95, eta in 0.0f64..0.45, t in 0.0f64..5.0) {
            let orbit = Orbit::new(frac * regime(eta).v0(), eta).unwrap();
            let period = 4.0 * orbit.quarter_period().unwrap();
            let (a, _) = orbit.state(t).unwrap();
            let (b, _) = orbit.state(t + period).unwrap();
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
