//! Closed-form quantities of the reduced scalar problem.
//!
//! With `y = u(·,1) − u(·,0)` and `x = 2θ − 1` the equilibrium system
//! collapses to the autonomous equation `y'' = G'(y)/2` with first
//! integral `y'² − G(y) = v²`, where
//!
//! ```text
//! G(y) = y⁴/4 + 2η|y|³ + 4η²y² − y².
//! ```
//!
//! For `η < 1/2` the potential dips below zero on `(0, y*)`, which is what
//! produces periodic characteristics and multiple equilibria.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::roots;

/// One game instance: background jump rate, horizon, initial mass at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<S> {
    pub eta: S,
    pub horizon: S,
    pub theta_bar: S,
}

impl<S: Real> ModelParams<S> {
    pub fn new(eta: S, horizon: S, theta_bar: S) -> Result<Self> {
        if !(eta >= S::zero()) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be finite and >= 0, got {eta}")));
        }
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be finite and > 0, got {horizon}")));
        }
        if !(theta_bar >= S::zero() && theta_bar <= S::one()) {
            return Err(Error::InvalidParameter(format!("theta_bar must lie in [0, 1], got {theta_bar}")));
        }
        Ok(Self { eta, horizon, theta_bar })
    }

    /// Terminal value `2θ̄ − 1` the shooting map has to hit.
    pub fn target(&self) -> S {
        S::lit(2.0) * self.theta_bar - S::one()
    }

    pub fn with_horizon(&self, horizon: S) -> Result<Self> {
        Self::new(self.eta, horizon, self.theta_bar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    /// `η ≥ 1/2`: the shooting map is monotone, one equilibrium for every `(T, θ̄)`.
    UniqueForAll,
    /// `η < 1/2`: periodic characteristics exist and equilibria may be multiple.
    PossiblyMultiple,
}

/// Critical structure of `G` for a given `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime<S> {
    pub kind: RegimeKind,
    /// Interior minimiser `√(η²+2) − 3η` of `G` on `y ≥ 0` (only for `η < 1/2`).
    pub y_star: Option<S>,
    /// `v₀ = √(−G(y*))` (only for `η < 1/2`).
    pub v_zero: Option<S>,
    /// Supremum `1 − η² − η√(η²+2)` of `x_v(t)` over oscillatory velocities.
    pub x_threshold: S,
}

impl<S: Real> Regime<S> {
    pub fn is_multiple(&self) -> bool {
        self.kind == RegimeKind::PossiblyMultiple
    }

    /// `v₀`, or zero in the monotone regime.
    pub fn v0(&self) -> S {
        self.v_zero.unwrap_or_else(S::zero)
    }

    /// Whether `v` lies in the oscillatory band `0 < |v| < v₀`.
    pub fn is_oscillatory(&self, v: S) -> bool {
        match self.v_zero {
            Some(v0) => v != S::zero() && v.abs() < v0,
            None => false,
        }
    }
}

/// `G(y) = ¼y⁴ + 2η|y|³ + 4η²y² − y²`.
pub fn potential<S: Real>(y: S, eta: S) -> S {
    let a = y.abs();
    let y2 = a * a;
    S::lit(0.25) * y2 * y2 + S::lit(2.0) * eta * y2 * a + (S::lit(4.0) * eta * eta - S::one()) * y2
}

/// `G'(y) = y³ + 6ηy² + 8η²y − 2y` on the branch `y ≥ 0`.
pub fn potential_derivative<S: Real>(y: S, eta: S) -> Result<S> {
    if y < S::zero() {
        return Err(Error::Domain { op: "potential_derivative", detail: format!("y = {y} < 0") });
    }
    Ok(y * (y * y + S::lit(6.0) * eta * y + S::lit(8.0) * eta * eta - S::lit(2.0)))
}

/// `1 − η² − η√(η²+2)`.
pub fn x_threshold<S: Real>(eta: S) -> S {
    S::one() - eta * eta - eta * (eta * eta + S::lit(2.0)).sqrt()
}

pub fn regime<S: Real>(eta: S) -> Regime<S> {
    let x_threshold = x_threshold(eta);
    if eta >= S::lit(0.5) {
        return Regime { kind: RegimeKind::UniqueForAll, y_star: None, v_zero: None, x_threshold };
    }
    let y_star = (eta * eta + S::lit(2.0)).sqrt() - S::lit(3.0) * eta;
    let v_zero = (-potential(y_star, eta)).max(S::zero()).sqrt();
    Regime { kind: RegimeKind::PossiblyMultiple, y_star: Some(y_star), v_zero: Some(v_zero), x_threshold }
}

/// Smallest positive root `y(v)` of `G(y) + v² = 0`.
///
/// Defined for `η < 1/2` and `0 < |v| < v₀`. Bracketed on `[|v|, y*]`
/// where `G + v²` is strictly decreasing, refined by Newton steps.
pub fn smallest_positive_root<S: Real>(v: S, eta: S) -> Result<S> {
    let reg = regime(eta);
    let (Some(y_star), Some(v0)) = (reg.y_star, reg.v_zero) else {
        return Err(Error::Domain { op: "smallest_positive_root", detail: format!("eta = {eta} >= 1/2") });
    };
    let a = v.abs();
    if a == S::zero() || a >= v0 {
        return Err(Error::Domain {
            op: "smallest_positive_root",
            detail: format!("|v| = {a} outside (0, v0 = {v0})"),
        });
    }
    let poly = EnergyPolynomial::new(v, eta);
    if poly.eval(y_star) >= S::zero() {
        return Err(Error::Domain {
            op: "smallest_positive_root",
            detail: format!("|v| = {a} indistinguishable from v0 = {v0} in this precision"),
        });
    }
    // p decreasing on [|v|, y*]: g = -p is increasing, g(|v|) ≤ 0 ≤ g(y*).
    let eval = |z: S| (-poly.eval(z), -poly.derivative(z));
    let x0 = a / (S::one() - S::lit(4.0) * eta * eta).sqrt();
    roots::newton_increasing(eval, a, y_star, x0.min(y_star), S::epsilon() * y_star)
}

/// The quartic `p(z) = G(z) + v²` restricted to `z ≥ 0`:
/// `¼z⁴ + 2ηz³ + (4η² − 1)z² + v²`. Coefficients stored lowest first.
#[derive(Debug, Clone, Copy)]
pub struct EnergyPolynomial<S> {
    pub coeffs: [S; 5],
}

impl<S: Real> EnergyPolynomial<S> {
    pub fn new(v: S, eta: S) -> Self {
        Self {
            coeffs: [
                v * v,
                S::zero(),
                S::lit(4.0) * eta * eta - S::one(),
                S::lit(2.0) * eta,
                S::lit(0.25),
            ],
        }
    }

    pub fn eval(&self, z: S) -> S {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self, z: S) -> S {
        let c = &self.coeffs;
        ((S::lit(4.0) * c[4] * z + S::lit(3.0) * c[3]) * z + S::lit(2.0) * c[2]) * z + c[1]
    }

    /// `z⁴ p(1/z)`, the polynomial behind the tail substitution `z = 1/u`.
    pub fn reversed(&self) -> [S; 5] {
        let c = &self.coeffs;
        [c[4], c[3], c[2], c[1], c[0]]
    }

    /// Synthetic division by `(z − r)`; returns the cubic quotient.
    pub fn deflate(&self, r: S) -> [S; 4] {
        deflate(&self.coeffs, r)
    }
}

/// Divides the polynomial with coefficients `c` (lowest first) by `(z − r)`,
/// dropping the remainder.
pub fn deflate<S: Real, const N: usize, const M: usize>(c: &[S; N], r: S) -> [S; M] {
    debug_assert_eq!(M + 1, N);
    let mut q = [S::zero(); M];
    let mut acc = c[N - 1];
    q[M - 1] = acc;
    for k in (1..M).rev() {
        acc = c[k] + r * acc;
        q[k - 1] = acc;
    }
    q
}

pub fn horner<S: Real>(c: &[S], z: S) -> S {
    c.iter().rev().fold(S::zero(), |acc, &a| acc * z + a)
}
