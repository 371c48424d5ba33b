//! Scalar special functions of the elastic graph energy.
//!
//! `G(s) = ∫₀ˢ (1+t²)^{-5/4} dt` turns the energy into `∫ [G(u')']²`, it
//! saturates at `±c₀/2`, and the midpoint height `H(A)` of the symmetric cone
//! critical point is a ratio of two Gauss hypergeometric series.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, quad};

/// Absolute quadrature tolerance used for `G`.
pub const G_ABS_TOL: f64 = 1e-13;

/// Truncation point of the direct quadrature route for `c₀`.
pub const C0_TRUNCATION: f64 = 1e6;

/// Integrand of `G`.
#[inline]
pub fn g_prime(t: f64) -> f64 {
    (1.0 + t * t).powf(-1.25)
}

// After t = v^{-2} the tail of G on [1, ∞) becomes ∫₀¹ 2v²(1+v⁴)^{-5/4} dv,
// which is smooth up to v = 0.
#[inline]
fn g_tail_integrand(v: f64) -> f64 {
    let v2 = v * v;
    2.0 * v2 * (1.0 + v2 * v2).powf(-1.25)
}

struct Constants {
    g_one: f64,
    c0: f64,
    c0_truncated: f64,
}

fn constants() -> &'static Constants {
    static CELL: OnceLock<Constants> = OnceLock::new();
    CELL.get_or_init(|| {
        let g_one = quad(g_prime, 0.0, 1.0, 1e-16, 1e-16).expect("G(1) quadrature");
        let tail = quad(g_tail_integrand, 0.0, 1.0, 1e-16, 1e-16).expect("G tail quadrature");
        let c0 = 2.0 * (g_one + tail);
        let c0_truncated = c0_by_truncated_quadrature(C0_TRUNCATION);
        Constants {
            g_one,
            c0,
            c0_truncated,
        }
    })
}

/// `c₀` from `∫_{-M}^{M}` plus the analytic tail `(4/3) M^{-3/2}`.
pub fn c0_by_truncated_quadrature(m: f64) -> f64 {
    let half = integrate(g_prime, 0.0, m, 1e-14, 1e-16).expect("c0 quadrature").value;
    2.0 * half + (4.0 / 3.0) * m.powf(-1.5)
}

/// `c₀ = ∫_ℝ (1+t²)^{-5/4} dt = 2 lim_{s→∞} G(s)`.
pub fn c0() -> f64 {
    constants().c0
}

/// Both routes to `c₀`: `(limit of 2G, truncated quadrature + tail)`.
pub fn c0_estimates() -> (f64, f64) {
    let c = constants();
    (c.c0, c.c0_truncated)
}

/// Guard band kept away from the saturation value `c₀/2` of `G`.
pub fn g_guard() -> f64 {
    1e-9 * c0()
}

pub fn g(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("G requires a finite slope, got {s}")));
    }
    let a = s.abs();
    let value = if a <= 1.0 {
        quad(g_prime, 0.0, a, G_ABS_TOL * 1e-2, 1e-16)?
    } else {
        constants().g_one + quad(g_tail_integrand, a.powf(-0.5), 1.0, G_ABS_TOL * 1e-2, 1e-16)?
    };
    Ok(value.copysign(s))
}

/// Inverse of `G` on `(-c₀/2 + guard, c₀/2 - guard)`.
pub fn g_inv(y: f64) -> Result<f64> {
    let half = 0.5 * c0();
    if !y.is_finite() || y.abs() >= half - g_guard() {
        return Err(Error::OutOfRange {
            value: y,
            detail: format!("G saturates at ±{half:.15}; G⁻¹ needs |y| < c₀/2 − guard"),
        });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let target = y.abs();
    let ratio = 2.0 * target / c0();
    let mut s = target / (1.0 - ratio * ratio);

    // bracket [lo, hi] with G(lo) ≤ target < G(hi)
    let mut lo = 0.0;
    let mut hi = s.max(1.0);
    while g(hi)? <= target {
        lo = hi;
        hi *= 4.0;
    }
    for _ in 0..200 {
        let r = g(s)? - target;
        if r == 0.0 {
            break;
        }
        if r < 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        let mut next = s - r / g_prime(s);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * s.abs() {
            s = next;
            break;
        }
        s = next;
    }
    Ok(s.copysign(y))
}

/// Parameters of a Gauss hypergeometric series `₂F₁(a, b; c; z)`.
#[derive(Debug, Clone, Copy)]
pub struct HypergeometricParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub series_tol: f64,
    pub max_terms: usize,
}

impl HypergeometricParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            c,
            series_tol: 1e-16,
            max_terms: 2_000_000,
        }
    }

    pub fn with_tolerance(mut self, series_tol: f64, max_terms: usize) -> Self {
        self.series_tol = series_tol;
        self.max_terms = max_terms;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.c <= 0.0 && self.c.fract() == 0.0 {
            return Err(Error::Parameter(format!(
                "c = {} is a nonpositive integer; the series is undefined",
                self.c
            )));
        }
        if !(self.series_tol > 0.0) || self.max_terms == 0 {
            return Err(Error::Parameter("series_tol must be > 0 and max_terms ≥ 1".into()));
        }
        Ok(())
    }
}

fn hyp2f1_series(p: &HypergeometricParams, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..p.max_terms {
        let nf = n as f64;
        let ratio = (p.a + nf) * (p.b + nf) / ((p.c + nf) * (nf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // term ratios tend to z; bound the remaining tail geometrically
        let rho = ratio.abs().max(z.abs());
        if rho < 1.0 {
            let tail = term.abs() * rho / (1.0 - rho);
            if tail <= p.series_tol * sum.abs() {
                return Ok(sum);
            }
        }
    }
    let tail = (term / sum).abs();
    Err(Error::SeriesConvergence {
        terms: p.max_terms,
        tail,
    })
}

/// `₂F₁(a, b; c; z)` for real `z < 1`: direct series on `[0, 1)`, Pfaff
/// transformation `(1-z)^{-a} ₂F₁(a, c-b; c; z/(z-1))` for `z < 0`.
pub fn hyp2f1(p: &HypergeometricParams, z: f64) -> Result<f64> {
    p.validate()?;
    if !z.is_finite() || z >= 1.0 {
        return Err(Error::Domain(format!("₂F₁ is only implemented for z < 1, got {z}")));
    }
    if z >= 0.0 {
        hyp2f1_series(p, z)
    } else {
        let mapped = HypergeometricParams {
            b: p.c - p.b,
            ..*p
        };
        let w = z / (z - 1.0);
        Ok((1.0 - z).powf(-p.a) * hyp2f1_series(&mapped, w)?)
    }
}

/// Midpoint height `H(A)` of the symmetric critical point with initial
/// slope `A`, via `(A/3) ₂F₁(1,¼;7/4;x) / ₂F₁(1,¼;¾;x)`, `x = A²/(1+A²)`.
#[allow(non_snake_case)]
pub fn h_of_A(a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("H(A) requires finite A ≥ 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let x = a * a / (1.0 + a * a);
    let num = hyp2f1(&HypergeometricParams::new(1.0, 0.25, 1.75), x)?;
    let den = hyp2f1(&HypergeometricParams::new(1.0, 0.25, 0.75), x)?;
    Ok(a / 3.0 * num / den)
}

/// The two singular integrals behind `H(A)`, desingularized by `z = A − w²`:
/// returns `(∫₀^A (A−z)^{-1/2}(1+z²)^{-5/4} dz, ∫₀^A z (A−z)^{-1/2}(1+z²)^{-5/4} dz)`.
pub fn cone_integrals(a: f64, w_upper: f64) -> Result<(f64, f64)> {
    let weight = |w: f64| {
        let z = a - w * w;
        2.0 * g_prime(z)
    };
    let i0 = quad(weight, 0.0, w_upper, 1e-15, 1e-15)?;
    let i1 = quad(|w| (a - w * w) * weight(w), 0.0, w_upper, 1e-15, 1e-15)?;
    Ok((i0, i1))
}

/// Second evaluation path for `H(A)` by quadrature of the original integrals.
#[allow(non_snake_case)]
pub fn h_of_A_quadrature(a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("H(A) requires finite A ≥ 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let (i0, i1) = cone_integrals(a, a.sqrt())?;
    Ok(0.5 * i1 / i0)
}

/// Largest slope searched by [`h_inv`]; `H` is bounded and flattens quickly.
pub const H_INV_MAX_SLOPE: f64 = 100.0;

/// Inverse of `H`: the unique `A > 0` with `H(A) = h`.
pub fn h_inv(h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::OutOfRange {
            value: h,
            detail: "H⁻¹ needs a positive obstacle height".into(),
        });
    }
    let mut lo = 0.0;
    let mut hi = (3.0 * h).min(H_INV_MAX_SLOPE);
    while h_of_A(hi)? <= h {
        lo = hi;
        if hi >= H_INV_MAX_SLOPE {
            return Err(Error::Bracket(format!(
                "height {h} is above H({H_INV_MAX_SLOPE}) = {:.6}",
                h_of_A(H_INV_MAX_SLOPE)?
            )));
        }
        hi = (2.0 * hi).min(H_INV_MAX_SLOPE);
    }
    // bisection to a coarse relative width, then secant/Newton polish inside the bracket
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if h_of_A(mid)? < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..20 {
        let r = h_of_A(a)? - h;
        if r.abs() <= 1e-15 * h.max(1e-300) {
            break;
        }
        if r < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let da = 1e-6 * a;
        let slope = (h_of_A(a + da)? - h_of_A(a - da)?) / (2.0 * da);
        let mut next = a - r / slope;
        if !(next > lo && next < hi) || !slope.is_finite() || slope <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() <= 2.0 * f64::EPSILON * a {
            a = next;
            break;
        }
        a = next;
    }
    Ok(a)
}

/// The explicit profile `u_c` whose energy is `c²`.
pub fn u_c_value(c: f64, x: f64) -> Result<f64> {
    check_uc_parameter(c)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("u_c is defined on [0, 1], got x = {x}")));
    }
    uc_from_offset(c, 0.5 - x)
}

pub(crate) fn check_uc_parameter(c: f64) -> Result<()> {
    if !(c > 0.0 && c < c0()) {
        return Err(Error::Domain(format!("u_c requires 0 < c < c₀ = {:.15}, got {c}", c0())));
    }
    if 0.5 * c >= 0.5 * c0() - g_guard() {
        return Err(Error::Domain(format!("c = {c} is inside the saturation guard band of G")));
    }
    Ok(())
}

/// `u_c` evaluated at `x = ½ − offset`; callers on a grid pass the exact
/// symmetric offset so that mirrored nodes give bit-identical values.
pub(crate) fn uc_from_offset(c: f64, offset: f64) -> Result<f64> {
    let inner = g_inv(c * offset)?;
    let edge = g_inv(0.5 * c)?;
    let value = 2.0 / (c * (1.0 + inner * inner).powf(0.25)) - 2.0 / (c * (1.0 + edge * edge).powf(0.25));
    Ok(value.max(0.0))
}

/// `c₀²/4`, the energy threshold for existence of the flow.
pub fn existence_threshold() -> f64 {
    let c = c0();
    0.25 * c * c
}

/// `G(2)²`, below which symmetric minimizers exist and the convexity window of `1/G⁻¹` applies.
pub fn minimality_threshold() -> f64 {
    let v = g(2.0).expect("G(2)");
    v * v
}

/// `G(√(2/3))²`, the initial-energy bound for touching the obstacle in finite time.
pub fn touching_threshold() -> f64 {
    let v = g((2.0f64 / 3.0).sqrt()).expect("G(sqrt(2/3))");
    v * v
}

#[cfg(test)]
mod tests {
    use super::*;

    // adaptive Simpson oracle, independent of the Gauss–Kronrod path
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn g_basic_values() {
        assert_eq!(g(0.0).unwrap(), 0.0);
        let s = 0.7;
        assert_eq!(g(-s).unwrap(), -g(s).unwrap());
        let oracle = simpson(g_prime, 0.0, 1.0, 1e-13);
        assert!((g(1.0).unwrap() - oracle).abs() < 1e-12);
        assert!((g(1.0).unwrap() - 0.7443).abs() < 1e-4);
        // mpmath, 30 digits
        assert!((g(1.0).unwrap() - 0.744_303_079_760_492_9).abs() < 1e-14);
        assert!((g(2.0).unwrap() - 0.989_284_009_500_578_4).abs() < 1e-14);
    }

    #[test]
    fn g_rejects_non_finite() {
        assert!(matches!(g(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(g(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn g_matches_simpson_beyond_one() {
        for &s in &[1.5, 3.0, 10.0, 250.0] {
            let oracle = simpson(g_prime, 0.0, s, 1e-13);
            assert!((g(s).unwrap() - oracle).abs() < 1e-11, "s = {s}");
        }
    }

    #[test]
    fn c0_two_routes_agree() {
        let (limit, truncated) = c0_estimates();
        assert!((limit - truncated).abs() < 1e-10, "{limit} vs {truncated}");
        assert!((limit - 2.39628).abs() < 1e-5);
        assert!((limit - 2.396_280_469_471_184_4).abs() < 1e-14);
        assert!((existence_threshold() - 1.43554).abs() < 1e-5);
        let gap = 0.5 * c0() - g(1e6).unwrap();
        assert!(gap > 0.0 && gap < 1e-6, "gap {gap}");
    }

    #[test]
    fn g_inv_round_trips() {
        assert_eq!(g_inv(0.0).unwrap(), 0.0);
        assert!((g_inv(g(2.0).unwrap()).unwrap() - 2.0).abs() < 1e-12);
        // Newton on the Simpson oracle: G(s) = 0.7443 → s ≈ 0.99999267508735
        assert!((g_inv(0.7443).unwrap() - 0.999_992_675_087_353).abs() < 1e-11);
        for &y in &[-1.1, -0.3, 1e-6, 0.5, 1.0, 1.15, 1.19] {
            let s = g_inv(y).unwrap();
            assert!((g(s).unwrap() - y).abs() < 1e-12, "y = {y}");
        }
    }

    #[test]
    fn g_inv_near_saturation() {
        let y = 0.5 * c0() - 2.0 * g_guard();
        let s = g_inv(y).unwrap();
        assert!(s > 1e5);
        assert!((g(s).unwrap() - y).abs() < 1e-12);
        assert!(matches!(g_inv(0.5 * c0()), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn hyp2f1_values() {
        let p = HypergeometricParams::new(0.3, 1.7, 2.2);
        assert_eq!(hyp2f1(&p, 0.0).unwrap(), 1.0);
        let log = hyp2f1(&HypergeometricParams::new(1.0, 1.0, 2.0).with_tolerance(1e-14, 10_000), 0.5).unwrap();
        assert!((log - 2.0 * 2f64.ln()).abs() < 1e-13);
        assert!((log - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn hyp2f1_pfaff_example() {
        let a: f64 = 1.3;
        let lhs = hyp2f1(&HypergeometricParams::new(1.0, 0.5, 0.75), -a * a).unwrap();
        let rhs = hyp2f1(&HypergeometricParams::new(1.0, 0.25, 0.75), a * a / (1.0 + a * a)).unwrap() / (1.0 + a * a);
        assert!((lhs - rhs).abs() < 1e-10);
        // mpmath value of ₂F₁(1, ½; ¾; −1.69)
        assert!((lhs - 0.525_424_574_253_731_2).abs() < 1e-13);
    }

    #[test]
    fn hyp2f1_errors() {
        let bad = HypergeometricParams::new(1.0, 1.0, -2.0);
        assert!(matches!(hyp2f1(&bad, 0.1), Err(Error::Parameter(_))));
        let slow = HypergeometricParams::new(1.0, 0.25, 0.75).with_tolerance(1e-16, 5);
        assert!(matches!(hyp2f1(&slow, 0.9), Err(Error::SeriesConvergence { .. })));
        assert!(hyp2f1(&HypergeometricParams::new(1.0, 1.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn h_values() {
        assert_eq!(h_of_A(0.0).unwrap(), 0.0);
        let small = h_of_A(0.01).unwrap();
        assert!((small - 0.003333).abs() < 1e-6);
        assert!((small - 0.003_333_269_843_963_294).abs() < 1e-15);
        let one_series = h_of_A(1.0).unwrap();
        let one_quad = h_of_A_quadrature(1.0).unwrap();
        assert!((one_series - one_quad).abs() < 1e-9);
        assert!((one_series - 0.287_492_609_646_722_8).abs() < 1e-14);
        assert!(matches!(h_of_A(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn h_inverse() {
        let a = h_inv(h_of_A(0.8).unwrap()).unwrap();
        assert!((a - 0.8).abs() < 1e-10);
        let small = h_inv(0.003333).unwrap();
        assert!((small - 0.01).abs() < 1e-6);
        assert!((small - 0.009_999_190_421_855_526).abs() < 1e-12);
        let a05 = h_inv(0.05).unwrap();
        assert!(a05 > 0.0);
        assert!((h_of_A(a05).unwrap() - 0.05).abs() < 1e-10);
        assert!(h_inv(0.0).is_err());
        assert!(h_inv(-1.0).is_err());
        assert!(matches!(h_inv(0.9), Err(Error::Bracket(_))));
    }

    #[test]
    fn u_c_endpoints_and_symmetry() {
        assert!(u_c_value(1.0, 0.0).unwrap().abs() < 1e-15);
        assert!(u_c_value(1.0, 1.0).unwrap().abs() < 1e-15);
        let d = u_c_value(1.0, 0.3).unwrap() - u_c_value(1.0, 0.7).unwrap();
        assert!(d.abs() < 1e-14);
        assert!(u_c_value(0.0, 0.5).is_err());
        assert!(u_c_value(c0(), 0.5).is_err());
        assert!(u_c_value(1.0, 1.5).is_err());
    }

    #[test]
    fn thresholds() {
        assert!((minimality_threshold() - 0.978_682_851_453_540_4).abs() < 1e-13);
        assert!((touching_threshold() - 0.432_459_855_496_442_3).abs() < 1e-13);
        assert!(minimality_threshold() < existence_threshold());
    }
}
