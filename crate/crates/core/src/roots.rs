//! Bracketing root finders used by the shooting and inversion code.
//!
//! All routines accept functions that may return `±∞` (for example a
//! shooting map evaluated past the blow-up time); such values only take
//! part in sign decisions, never in interpolation.

use crate::error::{Error, Result};
use crate::real::Real;

const MAX_ITER: usize = 400;

#[inline]
fn same_sign<S: Real>(a: S, b: S) -> bool {
    (a > S::zero() && b > S::zero()) || (a < S::zero() && b < S::zero())
}

fn check_bracket<S: Real>(routine: &'static str, a: S, b: S, fa: S, fb: S) -> Result<()> {
    if fa.is_nan() || fb.is_nan() || same_sign(fa, fb) {
        return Err(Error::NoSignChange {
            routine,
            lo: a.as_f64(),
            hi: b.as_f64(),
            flo: fa.as_f64(),
            fhi: fb.as_f64(),
        });
    }
    Ok(())
}

/// Plain bisection. Stops when the bracket is narrower than
/// `xtol + rtol·|x|`.
pub fn bisect<S, F>(mut f: F, mut a: S, mut b: S, xtol: S) -> Result<S>
where
    S: Real,
    F: FnMut(S) -> S,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == S::zero() {
        return Ok(a);
    }
    if fb == S::zero() {
        return Ok(b);
    }
    check_bracket("bisect", a, b, fa, fb)?;
    let two = S::lit(2.0);
    for _ in 0..MAX_ITER {
        let m = a + (b - a) / two;
        if (b - a).abs() <= xtol + S::solve_tol() * m.abs() || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == S::zero() {
            return Ok(m);
        }
        if same_sign(fm, fa) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(Error::NoConvergence { routine: "bisect", lo: a.as_f64(), hi: b.as_f64() })
}

/// Brent's method (inverse quadratic interpolation safeguarded by
/// bisection). Non-finite function values force a bisection step.
pub fn brent<S, F>(mut f: F, a: S, b: S, xtol: S) -> Result<S>
where
    S: Real,
    F: FnMut(S) -> S,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == S::zero() {
        return Ok(a);
    }
    if fb == S::zero() {
        return Ok(b);
    }
    check_bracket("brent", a, b, fa, fb)?;

    let zero = S::zero();
    let half = S::lit(0.5);
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if same_sign(fb, fc) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * S::epsilon() * b.abs() + half * xtol;
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == zero {
            return Ok(b);
        }
        let finite = fa.is_finite() && fb.is_finite() && fc.is_finite();
        if finite && e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = S::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - S::one()));
                q = (qq - S::one()) * (r - S::one()) * (s - S::one());
            }
            if p > zero {
                q = -q;
            }
            p = p.abs();
            let bound = (three * xm * q - (tol1 * q).abs()).min((e * q).abs());
            if two * p < bound {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 { b + d } else { b + tol1 * xm.signum() };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::NoConvergence { routine: "brent", lo: b.as_f64(), hi: c.as_f64() });
        }
    }
    Err(Error::NoConvergence { routine: "brent", lo: b.as_f64(), hi: c.as_f64() })
}

/// Newton iteration for an increasing function, safeguarded by the
/// bracket `[lo, hi]` with `g(lo) ≤ 0 ≤ g(hi)`.
///
/// `eval(x)` returns `(g(x), g'(x))`. Iterates that leave the bracket or
/// fail to shrink it fast enough are replaced by bisection.
pub fn newton_increasing<S, F>(mut eval: F, mut lo: S, mut hi: S, x0: S, xtol: S) -> Result<S>
where
    S: Real,
    F: FnMut(S) -> (S, S),
{
    let two = S::lit(2.0);
    let mut x = if x0 > lo && x0 < hi { x0 } else { lo + (hi - lo) / two };
    let mut last_step = hi - lo;
    let mut prev_step = last_step;
    for _ in 0..MAX_ITER {
        let (g, dg) = eval(x);
        if g == S::zero() {
            return Ok(x);
        }
        if g < S::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let step = if dg > S::zero() && dg.is_finite() { -g / dg } else { S::nan() };
        let mut next = x + step;
        let width = hi - lo;
        if !(next > lo && next < hi) || step.abs() > S::lit(0.5) * prev_step.abs() {
            next = lo + width / two;
        }
        prev_step = last_step;
        last_step = next - x;
        if (next - x).abs() <= xtol + S::solve_tol() * next.abs() {
            return Ok(next);
        }
        if width <= xtol + S::solve_tol() * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence { routine: "newton", lo: lo.as_f64(), hi: hi.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_sqrt2() {
        let r = brent(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_tolerates_infinite_values() {
        // 1/(1-x) - 5 with +∞ reported beyond the pole.
        let f = |x: f64| if x >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - x) - 5.0 };
        let r = brent(f, 0.0, 3.0, 1e-14).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_missing_sign_change() {
        assert!(matches!(
            bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn newton_increasing_escapes_two_cycle() {
        let g = |x: f64| ((20.0 * (x - 1.0)).atan(), 20.0 / (1.0 + 400.0 * (x - 1.0).powi(2)));
        let r = newton_increasing(g, 0.0, 2.0, 1.9, 1e-15).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn newton_increasing_converges_on_flat_start() {
        let r = newton_increasing(|x: f64| (x.powi(3) - 8.0, 3.0 * x * x), 0.0, 10.0, 0.0, 1e-15)
            .unwrap();
        assert!((r - 2.0).abs() < 1e-13);
    }
}
