//! Period, lag, zero-hit and escape integrals of the reduced characteristic.
//!
//! Every integral has the form `∫ dz / √p(z)` with `p(z) = G(z) + v²`.
//! Three orbit types are handled separately:
//!
//! * [`Oscillation`] for `0 < |v| < v₀`: `p` has a simple root `Y = y(v)`,
//!   removed by `z = Y sin φ`, which turns the integrand into
//!   `√Y √(1 + sin φ) / √Q(Y sin φ)` with `Q = p / (Y − z)`.
//! * [`Separatrix`] for `|v| = v₀`: `p = (z − y*)² R(z)`; the logarithmic
//!   part is integrated in closed form.
//! * [`Escape`] for `|v| > v₀` or `η ≥ 1/2`: `p > 0` on `[0, ∞)`; the tail
//!   beyond `z_s` is mapped to `u = 1/z`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::integrate::{graded_breaks, integrate_with_breaks};
use crate::real::Real;
use crate::roots;
use crate::scalar_model::{deflate, horner, regime, smallest_positive_root, EnergyPolynomial};

fn quad<S: Real, F: FnMut(S) -> S>(f: F, a: S, b: S, breaks: &[S]) -> S {
    integrate_with_breaks(f, a, b, breaks, S::zero(), S::quad_tol()).value
}

/// Inverts an increasing map `t(x)` given as `t(x) = ∫₀^x rate`, starting
/// from a known anchor and integrating increments between Newton iterates.
fn invert_cumulative<S, F>(rate: F, breaks: &[S], lo: S, hi: S, x0: S, target: S) -> Result<S>
where
    S: Real,
    F: Fn(S) -> S,
{
    let mut anchor = (lo, S::zero());
    let eval = |x: S| {
        let t = anchor.1 + quad(&rate, anchor.0, x, breaks);
        anchor = (x, t);
        (t - target, rate(x))
    };
    roots::newton_increasing(eval, lo, hi, x0, S::epsilon() * hi.abs())
}

/// Periodic orbit with `0 < |v| < v₀`.
#[derive(Debug, Clone)]
pub struct Oscillation<S> {
    v: S,
    amplitude: S,
    turning: S,
    quotient: [S; 4],
    breaks: Vec<S>,
    quarter: S,
    lag: S,
}

impl<S: Real> Oscillation<S> {
    pub fn new(v: S, eta: S) -> Result<Self> {
        let turning = smallest_positive_root(v, eta)?;
        let amplitude = v.abs();
        let q: [S; 4] = EnergyPolynomial::new(amplitude, eta).deflate(turning);
        let quotient = q.map(|c| -c);

        // Q(z) → 0 near Y when Y approaches the double root at v₀; the
        // integrand then peaks in a window of half-width ~√(2Q(Y)/(|Q'(Y)|Y))
        // around φ = π/2.
        let half_pi = S::lit(FRAC_PI_2);
        let q_end = horner(&quotient, turning);
        let dq = quotient[1]
            + turning * (S::lit(2.0) * quotient[2] + S::lit(3.0) * quotient[3] * turning);
        let width = (S::lit(2.0) * q_end / (dq.abs() * turning)).sqrt();
        let breaks = if width.is_finite() && width < S::lit(0.1) {
            graded_breaks(half_pi, S::lit(0.5), width)
        } else {
            Vec::new()
        };

        let mut orbit = Self { v, amplitude, turning, quotient, breaks, quarter: S::zero(), lag: S::zero() };
        orbit.quarter = orbit.time_at_angle(half_pi);
        let phi_v = (amplitude / turning).min(S::one()).asin();
        orbit.lag = quad(|p| orbit.rate(p), phi_v, half_pi, &orbit.breaks);
        Ok(orbit)
    }

    pub fn v(&self) -> S {
        self.v
    }

    /// `y(v)`, the maximal height of the orbit.
    pub fn turning_point(&self) -> S {
        self.turning
    }

    /// `T(v)`.
    pub fn quarter_period(&self) -> S {
        self.quarter
    }

    /// `H(v)`.
    pub fn lag(&self) -> S {
        self.lag
    }

    pub fn period(&self) -> S {
        S::lit(4.0) * self.quarter
    }

    /// `T_k(v) = (2k − 1)T(v) + H(v)`.
    pub fn zero_hit_time(&self, k: u32) -> S {
        S::lit(2.0 * k as f64 - 1.0) * self.quarter + self.lag
    }

    /// `dt/dφ` after the substitution `z = Y sin φ`.
    pub fn rate(&self, phi: S) -> S {
        let s = phi.sin();
        let q = horner(&self.quotient, self.turning * s);
        self.turning.sqrt() * (S::one() + s).sqrt() / q.sqrt()
    }

    pub fn time_at_angle(&self, phi: S) -> S {
        quad(|p| self.rate(p), S::zero(), phi, &self.breaks)
    }

    /// First-quarter time to climb from 0 to height `y ≤ Y`.
    pub fn time_to_height(&self, y: S) -> Result<S> {
        let y = y.abs();
        if y > self.turning * (S::one() + S::solve_tol()) {
            return Err(Error::Domain {
                op: "implicit_time",
                detail: format!("height {y} above the turning point {}", self.turning),
            });
        }
        Ok(self.time_at_angle((y / self.turning).min(S::one()).asin()))
    }

    /// `(y, ẏ)` of the first quarter for `|v|`, at `τ ∈ [0, T]`.
    pub fn first_quarter_state(&self, tau: S) -> Result<(S, S)> {
        let half_pi = S::lit(FRAC_PI_2);
        if tau <= S::zero() {
            return Ok((S::zero(), self.amplitude));
        }
        if tau >= self.quarter {
            return Ok((self.turning, S::zero()));
        }
        let guess = half_pi * tau / self.quarter;
        let phi = invert_cumulative(|p| self.rate(p), &self.breaks, S::zero(), half_pi, guess, tau)?;
        let (s, c) = phi.sin_cos();
        let q = horner(&self.quotient, self.turning * s);
        Ok((self.turning * s, self.turning.sqrt() * c * q.sqrt() / (S::one() + s).sqrt()))
    }

    /// `(y_v(t), ẏ_v(t))` via the four-quarter periodic extension.
    pub fn state(&self, t: S) -> Result<(S, S)> {
        let tq = self.quarter;
        let period = self.period();
        let tau = t - period * (t / period).floor();
        let two = S::lit(2.0);
        let (y, yd) = if tau < tq {
            self.first_quarter_state(tau)?
        } else if tau < two * tq {
            let (y, yd) = self.first_quarter_state(two * tq - tau)?;
            (y, -yd)
        } else if tau < S::lit(3.0) * tq {
            let (y, yd) = self.first_quarter_state(tau - two * tq)?;
            (-y, -yd)
        } else {
            let (y, yd) = self.first_quarter_state(period - tau)?;
            (-y, yd)
        };
        Ok(if self.v < S::zero() { (-y, -yd) } else { (y, yd) })
    }
}

/// Heteroclinic orbit `|v| = v₀`, climbing to `y*` in infinite time.
#[derive(Debug, Clone)]
pub struct Separatrix<S> {
    sign: S,
    y_star: S,
    r: [S; 3],
    r_star_sqrt: S,
    r_min: S,
    r_max: S,
}

impl<S: Real> Separatrix<S> {
    pub fn new(eta: S, negative: bool) -> Result<Self> {
        let reg = regime(eta);
        let (Some(y_star), Some(v0)) = (reg.y_star, reg.v_zero) else {
            return Err(Error::Domain { op: "separatrix", detail: format!("eta = {eta} >= 1/2") });
        };
        let poly = EnergyPolynomial::new(v0, eta);
        let cubic: [S; 4] = poly.deflate(y_star);
        let r: [S; 3] = deflate(&cubic, y_star);
        let r_star = horner(&r, y_star);
        let vertex = (-r[1] / (S::lit(2.0) * r[2])).max(S::zero()).min(y_star);
        let ends = [horner(&r, S::zero()), r_star, horner(&r, vertex)];
        let r_min = ends.iter().copied().fold(S::infinity(), S::min);
        let r_max = ends.iter().copied().fold(S::zero(), S::max);
        Ok(Self { sign: if negative { -S::one() } else { S::one() }, y_star, r, r_star_sqrt: r_star.sqrt(), r_min, r_max })
    }

    fn height(&self, w: S) -> S {
        -self.y_star * (-w).exp_m1()
    }

    /// Regular part of `1/((y* − z)√R(z))` after removing `1/((y* − z)√R*)`.
    fn regular(&self, z: S) -> S {
        let rz = horner(&self.r, z).sqrt();
        (self.r[2] * (self.y_star + z) + self.r[1]) / (rz * self.r_star_sqrt * (self.r_star_sqrt + rz))
    }

    /// Time to reach `y = y*(1 − e^{−w})`.
    pub fn time_of_log_gap(&self, w: S) -> S {
        w / self.r_star_sqrt + quad(|z| self.regular(z), S::zero(), self.height(w), &[])
    }

    pub fn time_to_height(&self, y: S) -> Result<S> {
        let y = y.abs();
        if y > self.y_star {
            return Err(Error::Domain {
                op: "implicit_time",
                detail: format!("height {y} beyond the equilibrium {}", self.y_star),
            });
        }
        if y == self.y_star {
            return Ok(S::infinity());
        }
        Ok(self.time_of_log_gap(-(-y / self.y_star).ln_1p()))
    }

    pub fn state(&self, t: S) -> Result<(S, S)> {
        if t <= S::zero() {
            return Ok((S::zero(), self.sign * self.y_star * self.r_star_sqrt));
        }
        // dt/dw = 1/√R(y(w)), so w lies in [t √R_min, t √R_max].
        let lo = t * self.r_min.sqrt();
        let hi = t * self.r_max.sqrt();
        let mut anchor = (S::zero(), S::zero());
        let eval = |w: S| {
            let (w0, t0) = anchor;
            let inc = (w - w0) / self.r_star_sqrt
                + quad(|z| self.regular(z), self.height(w0), self.height(w), &[]);
            anchor = (w, t0 + inc);
            (t0 + inc - t, S::one() / horner(&self.r, self.height(w)).sqrt())
        };
        let w = if hi <= lo {
            lo
        } else {
            roots::newton_increasing(eval, lo, hi, t * self.r_star_sqrt, S::epsilon() * hi)?
        };
        let y = self.height(w);
        let ydot = self.y_star * (-w).exp() * horner(&self.r, y).sqrt();
        Ok((self.sign * y, self.sign * ydot))
    }
}

/// Orbit escaping to infinity in finite time.
#[derive(Debug, Clone)]
pub struct Escape<S> {
    v: S,
    poly: EnergyPolynomial<S>,
    tail_poly: [S; 5],
    split: S,
    breaks: Vec<S>,
    head: S,
    tail: S,
}

impl<S: Real> Escape<S> {
    pub fn new(v: S, eta: S) -> Result<Self> {
        let a = v.abs();
        if a == S::zero() {
            return Err(Error::Domain { op: "escape_time", detail: "v = 0 never escapes".into() });
        }
        let reg = regime(eta);
        let poly = EnergyPolynomial::new(a, eta);
        let mut split = S::lit(10.0);
        let breaks = match (reg.y_star, reg.v_zero) {
            (Some(y_star), Some(v0)) => {
                if a <= v0 || poly.eval(y_star) <= S::zero() {
                    return Err(Error::Domain {
                        op: "escape_time",
                        detail: format!("|v| = {a} does not exceed v0 = {v0}"),
                    });
                }
                split = split.max(S::lit(4.0) * y_star);
                // Near-double root at y*: 1/√p peaks with half-width √(p(y*)/R*).
                let curvature = S::lit(0.5) * (S::lit(3.0) * y_star * y_star + S::lit(12.0) * eta * y_star
                    + S::lit(8.0) * eta * eta - S::lit(2.0));
                let width = (poly.eval(y_star) / curvature.max(S::epsilon())).sqrt();
                if width < S::lit(0.1) * y_star {
                    graded_breaks(y_star, S::lit(0.5) * y_star, width)
                } else {
                    vec![y_star]
                }
            }
            _ if a < S::one() => graded_breaks(S::zero(), S::lit(2.0), S::lit(0.5) * a),
            _ => Vec::new(),
        };
        let tail_poly = poly.reversed();
        let mut orbit = Self { v, poly, tail_poly, split, breaks, head: S::zero(), tail: S::zero() };
        orbit.head = quad(|z| orbit.rate(z), S::zero(), split, &orbit.breaks);
        orbit.tail = quad(|u| orbit.tail_rate(u), S::zero(), S::one() / split, &[]);
        Ok(orbit)
    }

    fn rate(&self, z: S) -> S {
        S::one() / self.poly.eval(z).sqrt()
    }

    /// `1/√(u⁴ p(1/u))`, the integrand in `u = 1/z`.
    fn tail_rate(&self, u: S) -> S {
        S::one() / horner(&self.tail_poly, u).sqrt()
    }

    pub fn escape_time(&self) -> S {
        self.head + self.tail
    }

    pub fn time_to_height(&self, y: S) -> S {
        let y = y.abs();
        if y <= self.split {
            quad(|z| self.rate(z), S::zero(), y, &self.breaks)
        } else {
            self.head + quad(|u| self.tail_rate(u), y.recip(), self.split.recip(), &[])
        }
    }

    pub fn state(&self, t: S) -> Result<(S, S)> {
        let escape = self.escape_time();
        if t >= escape {
            return Err(Error::BlowUp { escape_time: escape.as_f64(), requested: t.as_f64() });
        }
        let sign = if self.v < S::zero() { -S::one() } else { S::one() };
        if t <= S::zero() {
            return Ok((S::zero(), self.v));
        }
        if t <= self.head {
            let guess = (self.v.abs() * t).min(S::lit(0.5) * self.split);
            let y = invert_cumulative(|z| self.rate(z), &self.breaks, S::zero(), self.split, guess, t)?;
            return Ok((sign * y, sign * self.poly.eval(y).sqrt()));
        }
        // Remaining time ρ = ∫₀^u du/√r(u) with u = 1/y.
        let rho = escape - t;
        let u_max = self.split.recip();
        let guess = (S::lit(0.5) * rho).min(S::lit(0.5) * u_max);
        let u = invert_cumulative(|u| self.tail_rate(u), &[], S::zero(), u_max, guess, rho)?;
        let ydot = horner(&self.tail_poly, u).sqrt() / (u * u);
        Ok((sign / u, sign * ydot))
    }
}

fn oscillation_or_err<S: Real>(v: S, eta: S, op: &'static str) -> Result<Oscillation<S>> {
    let reg = regime(eta);
    if !reg.is_oscillatory(v) {
        return Err(Error::Domain { op, detail: format!("v = {v} is not in (0, v0 = {})", reg.v0()) });
    }
    Oscillation::new(v, eta)
}

/// `T(v) = ∫₀^{y(v)} dz / √(G(z) + v²)`.
pub fn quarter_period<S: Real>(v: S, eta: S) -> Result<S> {
    Ok(oscillation_or_err(v, eta, "quarter_period")?.quarter_period())
}

/// `H(v) = ∫_{|v|}^{y(v)} dz / √(G(z) + v²)`.
pub fn lag<S: Real>(v: S, eta: S) -> Result<S> {
    Ok(oscillation_or_err(v, eta, "lag")?.lag())
}

/// `T_k(v)`, the `k`-th time at which `x_v` vanishes; `+∞` off the
/// oscillatory band.
pub fn zero_hit_time<S: Real>(k: u32, v: S, eta: S) -> Result<S> {
    if k < 1 {
        return Err(Error::InvalidParameter("zero-hit index k must be >= 1".into()));
    }
    if v == S::zero() {
        return Err(Error::Domain { op: "zero_hit_time", detail: "x_0 vanishes identically".into() });
    }
    if !regime(eta).is_oscillatory(v) {
        return Ok(S::infinity());
    }
    Ok(Oscillation::new(v, eta)?.zero_hit_time(k))
}

/// Time for the first-quarter branch at speed `|v|` to climb from 0 to
/// `y_target`.
pub fn implicit_time<S: Real>(y_target: S, v: S, eta: S) -> Result<S> {
    if y_target < S::zero() {
        return Err(Error::Domain { op: "implicit_time", detail: format!("y_target = {y_target} < 0") });
    }
    if y_target == S::zero() {
        return Ok(S::zero());
    }
    if v == S::zero() {
        return Err(Error::Domain { op: "implicit_time", detail: "v = 0 stays at rest".into() });
    }
    let reg = regime(eta);
    if reg.is_oscillatory(v) {
        Oscillation::new(v, eta)?.time_to_height(y_target)
    } else if reg.v_zero == Some(v.abs()) {
        Separatrix::new(eta, false)?.time_to_height(y_target)
    } else {
        Ok(Escape::new(v, eta)?.time_to_height(y_target))
    }
}

/// `∫₀^∞ dz / √(G(z) + v²)`, the blow-up time of a non-oscillatory orbit.
/// Infinite exactly on the separatrix.
pub fn escape_time<S: Real>(v: S, eta: S) -> Result<S> {
    let reg = regime(eta);
    if reg.is_oscillatory(v) {
        return Err(Error::Domain {
            op: "escape_time",
            detail: format!("v = {v} oscillates (v0 = {})", reg.v0()),
        });
    }
    if v != S::zero() && reg.v_zero == Some(v.abs()) {
        return Ok(S::infinity());
    }
    Ok(Escape::new(v, eta)?.escape_time())
}

/// The speed `a` (above `v₀`, or above 0 when `η ≥ 1/2`) whose orbit escapes
/// exactly at `horizon`.
pub fn escape_velocity<S: Real>(horizon: S, eta: S) -> Result<S> {
    if !(horizon > S::zero()) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let v0 = regime(eta).v0();
    let f = |a: S| match Escape::new(a, eta) {
        Ok(e) => e.escape_time() - horizon,
        Err(_) => S::infinity(),
    };
    let mut hi = (S::lit(2.0) * v0).max(S::one());
    while f(hi) > S::zero() {
        hi = hi * S::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::NoConvergence { routine: "escape_velocity", lo: 0.0, hi: f64::INFINITY });
        }
    }
    // Shrink towards v₀ (or 0) until the orbit survives past the horizon.
    let mut gap = hi - v0;
    let lo = loop {
        gap = gap * S::lit(0.25);
        let cand = v0 + gap;
        if cand <= v0 {
            return Err(Error::UnresolvedBranch {
                branch: "escape".into(),
                detail: format!("no representable speed above v0 survives to t = {horizon}"),
            });
        }
        if f(cand) > S::zero() {
            break cand;
        }
        hi = cand;
    };
    roots::brent(f, lo, hi, S::epsilon() * hi)
}

/// Polynomial extrapolation to `h = 0` through the points `(h_i, f_i)`.
pub fn extrapolate_to_zero<S: Real>(h: &[S], f: &[S]) -> S {
    let mut p = f.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

/// Fritsch–Carlson monotone cubic interpolation.
fn pchip<S: Real>(xs: &[S], ys: &[S], x: S) -> S {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&xi| xi <= x) - 1;
    let slope = |j: usize| (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    let tangent = |j: usize| -> S {
        if j == 0 {
            return slope(0);
        }
        if j == n - 1 {
            return slope(n - 2);
        }
        let (d0, d1) = (slope(j - 1), slope(j));
        if d0 * d1 <= S::zero() {
            return S::zero();
        }
        let (h0, h1) = (xs[j] - xs[j - 1], xs[j + 1] - xs[j]);
        let (w1, w2) = (S::lit(2.0) * h1 + h0, h1 + S::lit(2.0) * h0);
        (w1 + w2) / (w1 / d0 + w2 / d1)
    };
    let h = xs[i + 1] - xs[i];
    let s = (x - xs[i]) / h;
    let (m0, m1) = (tangent(i), tangent(i + 1));
    let (s2, s3) = (s * s, s * s * s);
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    (two * s3 - three * s2 + S::one()) * ys[i]
        + (s3 - two * s2 + s) * h * m0
        + (three * s2 - two * s3) * ys[i + 1]
        + (s3 - s2) * h * m1
}

/// Samples of `T` and `H` over `(0, v₀)` together with their limits at `0+`.
#[derive(Debug, Clone)]
pub struct PeriodTable<S> {
    pub eta: S,
    pub v_zero: S,
    pub v_samples: Vec<S>,
    pub t_values: Vec<S>,
    pub h_values: Vec<S>,
    pub t_limit_at_zero: S,
    pub h_limit_at_zero: S,
    /// `T₁(0+) = T(0+) + H(0+)`.
    pub t1_limit_at_zero: S,
}

impl<S: Real> PeriodTable<S> {
    pub fn new(eta: S) -> Result<Self> {
        Self::with_samples(eta, 48)
    }

    pub fn with_samples(eta: S, body: usize) -> Result<Self> {
        let reg = regime(eta);
        let Some(v_zero) = reg.v_zero else {
            return Err(Error::Domain { op: "PeriodTable", detail: format!("eta = {eta} >= 1/2") });
        };
        let probes = [1e-2, 1e-3, 1e-4].map(|s| S::lit(s) * v_zero);
        let mut fracs: Vec<f64> = (1..body)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / body as f64).cos()))
            .collect();
        fracs.extend((3..=14).map(|j| 1.0 - 10f64.powi(-j)));
        fracs.extend([1e-2, 1e-3, 1e-4]);
        fracs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fracs.dedup();

        let mut v_samples = Vec::new();
        let mut t_values = Vec::new();
        let mut h_values = Vec::new();
        for f in fracs {
            let v = S::lit(f) * v_zero;
            if !(v < v_zero) {
                continue;
            }
            let Ok(orbit) = Oscillation::new(v, eta) else { continue };
            v_samples.push(v);
            t_values.push(orbit.quarter_period());
            h_values.push(orbit.lag());
        }

        let mut tp = [S::zero(); 3];
        let mut hp = [S::zero(); 3];
        for (i, &v) in probes.iter().enumerate() {
            let orbit = Oscillation::new(v, eta)?;
            tp[i] = orbit.quarter_period();
            hp[i] = orbit.lag();
        }
        let t_limit_at_zero = extrapolate_to_zero(&probes, &tp);
        let h_limit_at_zero = extrapolate_to_zero(&probes, &hp);
        Ok(Self {
            eta,
            v_zero,
            v_samples,
            t_values,
            h_values,
            t_limit_at_zero,
            h_limit_at_zero,
            t1_limit_at_zero: t_limit_at_zero + h_limit_at_zero,
        })
    }

    /// `T_k(0+) = (2k − 1)T(0+) + H(0+)`.
    pub fn zero_hit_limit(&self, k: u32) -> S {
        S::lit(2.0 * k as f64 - 1.0) * self.t_limit_at_zero + self.h_limit_at_zero
    }

    /// Number of `k ≥ 1` with `T_k(0+) < horizon`.
    pub fn branches_below(&self, horizon: S) -> u32 {
        let mut k = 0;
        while self.zero_hit_limit(k + 1) < horizon {
            k += 1;
        }
        k
    }

    pub fn interpolate_quarter_period(&self, v: S) -> S {
        pchip(&self.v_samples, &self.t_values, v.abs())
    }

    pub fn interpolate_lag(&self, v: S) -> S {
        pchip(&self.v_samples, &self.h_values, v.abs())
    }

    /// The unique `v ∈ (0, v₀)` with `T_k(v) = horizon`, or `None` when
    /// `horizon ≤ T_k(0+)`.
    pub fn zero_hit_velocity(&self, k: u32, horizon: S) -> Result<Option<S>> {
        let limit = self.zero_hit_limit(k);
        if horizon <= limit {
            return Ok(None);
        }
        let m = S::lit(2.0 * k as f64 - 1.0);
        let eta = self.eta;
        let f = |v: S| {
            if v <= S::zero() {
                return limit - horizon;
            }
            match Oscillation::new(v, eta) {
                Ok(o) => o.zero_hit_time(k) - horizon,
                Err(_) => S::infinity(),
            }
        };
        let idx = (0..self.v_samples.len()).find(|&i| m * self.t_values[i] + self.h_values[i] > horizon);
        let (lo, hi) = match idx {
            Some(0) => (S::zero(), self.v_samples[0]),
            Some(i) => (self.v_samples[i - 1], self.v_samples[i]),
            None => {
                let lo = *self.v_samples.last().unwrap();
                let hi = largest_oscillatory_speed(eta, self.v_zero);
                if !(f(hi) > S::zero()) {
                    return Err(Error::UnresolvedBranch {
                        branch: format!("T_{k}"),
                        detail: format!(
                            "T_{k}(v) = {horizon} needs a speed closer to v0 = {} than the precision resolves",
                            self.v_zero
                        ),
                    });
                }
                (lo, hi)
            }
        };
        roots::brent(f, lo, hi, S::epsilon() * self.v_zero).map(Some)
    }
}

/// Largest `v < v₀` for which the turning point is still resolvable.
pub fn largest_oscillatory_speed<S: Real>(eta: S, v_zero: S) -> S {
    let mut gap = S::lit(4.0) * S::epsilon();
    loop {
        let v = v_zero * (S::one() - gap);
        if Oscillation::new(v, eta).is_ok() {
            return v;
        }
        gap = gap * S::lit(2.0);
    }
}
