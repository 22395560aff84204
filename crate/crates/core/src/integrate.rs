//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! Integrands handed to this module are expected to be bounded on the
//! closed interval; endpoint singularities of the period integrals are
//! removed by substitutions before they get here.

use crate::real::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_715_893_815_400,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights, attached to XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const MAX_PANELS: usize = 4000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<S> {
    pub value: S,
    pub error: S,
    pub panels: usize,
}

#[derive(Clone, Copy)]
struct Panel<S> {
    a: S,
    b: S,
    value: S,
    error: S,
}

fn kronrod<S: Real, F: FnMut(S) -> S>(f: &mut F, a: S, b: S) -> Panel<S> {
    let half = S::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kron = fc * S::lit(WGK[10]);
    let mut gauss = S::zero();
    for j in 0..10 {
        let dx = half_len * S::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + S::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + S::lit(WG[j / 2]) * pair;
        }
    }
    Panel { a, b, value: kron * half_len, error: ((kron - gauss) * half_len).abs() }
}

/// Integrates `f` over `[a, b]`, pre-split at `breaks` (points outside
/// `(a, b)` are ignored), to `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_with_breaks<S, F>(mut f: F, a: S, b: S, breaks: &[S], abs_tol: S, rel_tol: S) -> Quadrature<S>
where
    S: Real,
    F: FnMut(S) -> S,
{
    if a == b {
        return Quadrature { value: S::zero(), error: S::zero(), panels: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, S::one()) } else { (b, a, -S::one()) };
    let mut cuts: Vec<S> = breaks.iter().copied().filter(|&c| c > lo && c < hi).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite break points"));
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(lo);
    nodes.extend(cuts);
    nodes.push(hi);

    let mut panels: Vec<Panel<S>> = nodes.windows(2).map(|w| kronrod(&mut f, w[0], w[1])).collect();
    let floor = S::epsilon() * S::lit(50.0);
    loop {
        let total: S = panels.iter().map(|p| p.value).sum();
        let err: S = panels.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol.max(floor) * total.abs());
        if err <= target || panels.len() >= MAX_PANELS {
            return Quadrature { value: sign * total, error: err, panels: panels.len() };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, S::neg_infinity()), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels[worst];
        let mid = p.a + (p.b - p.a) * S::lit(0.5);
        if mid <= p.a || mid >= p.b {
            // Panel can no longer be split in this precision.
            return Quadrature { value: sign * total, error: err, panels: panels.len() };
        }
        panels[worst] = kronrod(&mut f, p.a, mid);
        panels.push(kronrod(&mut f, mid, p.b));
    }
}

/// Integrates `f` over `[a, b]` to relative accuracy `rel_tol`.
pub fn integrate<S, F>(f: F, a: S, b: S, rel_tol: S) -> Quadrature<S>
where
    S: Real,
    F: FnMut(S) -> S,
{
    integrate_with_breaks(f, a, b, &[], S::min_positive_value(), rel_tol)
}

/// Composite 21-point Kronrod rule on `n` equal panels, no adaptivity.
pub fn composite<S, F>(mut f: F, a: S, b: S, n: usize) -> S
where
    S: Real,
    F: FnMut(S) -> S,
{
    let n = n.max(1);
    let h = (b - a) / S::lit(n as f64);
    (0..n)
        .map(|i| {
            let lo = a + h * S::lit(i as f64);
            let hi = if i + 1 == n { b } else { lo + h };
            kronrod(&mut f, lo, hi).value
        })
        .sum()
}

/// Break points accumulating geometrically on a center point, down to a
/// minimal offset `width`. Used where an integrand has a narrow peak.
pub fn graded_breaks<S: Real>(center: S, reach: S, width: S) -> Vec<S> {
    let mut out = vec![center];
    let mut d = reach;
    let width = width.max(S::epsilon() * center.abs().max(S::one()));
    while d > width {
        out.push(center - d);
        out.push(center + d);
        d = d * S::lit(0.25);
    }
    out.push(center - width);
    out.push(center + width);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x: f64| x.powi(6) - 3.0 * x, 0.0, 2.0, 1e-14);
        assert!((q.value - (128.0 / 7.0 - 6.0)).abs() < 1e-13);
        assert_eq!(q.panels, 1);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = integrate(|x: f64| x.cos(), 1.0, 0.0, 1e-14);
        assert!((q.value + 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn narrow_peak_found_with_graded_breaks() {
        let w = 1e-7;
        let f = |x: f64| 1.0 / ((x - 0.3).powi(2) + w * w).sqrt();
        let exact = (0.7 / w).asinh() + (0.3 / w).asinh();
        let q = integrate_with_breaks(f, 0.0, 1.0, &graded_breaks(0.3, 0.2, w), 0.0, 1e-14);
        assert!((q.value - exact).abs() < 1e-11 * exact, "{} vs {}", q.value, exact);
    }
}
