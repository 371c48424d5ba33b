//! The symmetric critical point over a symmetric cone obstacle.
//!
//! On `[0, ½]` the profile is parametrized by its slope `z = u′ ∈ [0, A]`,
//! `A = H⁻¹(height)`. With `w = √(A − z)` and `g(z) = (1+z²)^{-5/4}`,
//!
//! ```text
//! P(w) = ∫₀^w 2 g(A − t²) dt,   Q(w) = ∫₀^w 2 (A − t²) g(A − t²) dt,
//! x(w) = P(w) / (2 P(√A)),      u(w) = Q(w) / (2 P(√A)),
//! ```
//!
//! so `x` runs from 0 at `z = A` to ½ at `z = 0`, and `u(½) = H(A)`.

use serde::{Deserialize, Serialize};

use crate::discretization::{
    energy, energy_nodal_gradient, second_diff, GridFunction, Obstacle, UniformGrid,
};
use crate::error::{Error, Result};
use crate::quadrature::quad;
use crate::specialfn::{g_prime, h_inv, h_of_A};

/// Number of Chebyshev samples in `w` used to tabulate the parametrization.
pub const PARAMETRIC_SAMPLES: usize = 1024;

const QUAD_TOL: f64 = 1e-15;

/// Gap below which [`check_critical`] treats a node as touching the obstacle.
pub const CONTACT_TOL: f64 = 1e-9;

/// `F(z) = ∫_z^A (A−s)^{-1/2} g(s) ds / (2 ∫_0^A (A−s)^{-1/2} g(s) ds)`, the
/// position at which the critical profile with initial slope `A` has slope `z`.
pub fn f_of_z(z: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("F needs a positive slope A, got {a}")));
    }
    if !(0.0..=a).contains(&z) {
        return Err(Error::Domain(format!("F(z) needs 0 ≤ z ≤ A = {a}, got z = {z}")));
    }
    let weight = |w: f64| 2.0 * g_prime(a - w * w);
    let total = quad(weight, 0.0, a.sqrt(), QUAD_TOL, QUAD_TOL)?;
    let part = quad(weight, 0.0, (a - z).sqrt(), QUAD_TOL, QUAD_TOL)?;
    Ok(part / (2.0 * total))
}

/// Tabulated `P`, `Q` on Chebyshev nodes in `w` with exact evaluation in between.
#[derive(Debug, Clone)]
struct Parametrization {
    a: f64,
    i0: f64,
    ws: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl Parametrization {
    fn new(a: f64, samples: usize) -> Result<Self> {
        let top = a.sqrt();
        let ws: Vec<f64> = (0..=samples)
            .map(|j| {
                if j == samples {
                    top
                } else {
                    0.5 * top * (1.0 - (std::f64::consts::PI * j as f64 / samples as f64).cos())
                }
            })
            .collect();
        let mut p = vec![0.0; ws.len()];
        let mut q = vec![0.0; ws.len()];
        for j in 1..ws.len() {
            p[j] = p[j - 1] + quad(|w| Self::p_density(a, w), ws[j - 1], ws[j], QUAD_TOL * 1e-3, QUAD_TOL)?;
            q[j] = q[j - 1] + quad(|w| Self::q_density(a, w), ws[j - 1], ws[j], QUAD_TOL * 1e-3, QUAD_TOL)?;
        }
        let i0 = p[samples];
        Ok(Self { a, i0, ws, p, q })
    }

    fn p_density(a: f64, w: f64) -> f64 {
        2.0 * g_prime(a - w * w)
    }

    fn q_density(a: f64, w: f64) -> f64 {
        let z = a - w * w;
        2.0 * z * g_prime(z)
    }

    fn segment(&self, w: f64) -> usize {
        self.ws.partition_point(|&s| s <= w).clamp(1, self.ws.len() - 1) - 1
    }

    fn x_at(&self, w: f64) -> Result<f64> {
        let k = self.segment(w);
        let extra = quad(|t| Self::p_density(self.a, t), self.ws[k], w, QUAD_TOL * 1e-3, QUAD_TOL)?;
        Ok((self.p[k] + extra) / (2.0 * self.i0))
    }

    fn u_at(&self, w: f64) -> Result<f64> {
        let k = self.segment(w);
        let extra = quad(|t| Self::q_density(self.a, t), self.ws[k], w, QUAD_TOL * 1e-3, QUAD_TOL)?;
        Ok((self.q[k] + extra) / (2.0 * self.i0))
    }

    fn top(&self) -> f64 {
        *self.ws.last().expect("nonempty table")
    }

    /// Solves `map(w) = target` for a map tabulated as increasing in `w`,
    /// by safeguarded Newton inside the bracketing table segment.
    fn invert(
        &self,
        target: f64,
        table: &[f64],
        map: impl Fn(f64) -> Result<f64>,
        slope: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        let last = table.len() - 1;
        if target <= table[0] {
            return Ok(0.0);
        }
        if target >= table[last] {
            return Ok(self.top());
        }
        let k = table.partition_point(|&v| v <= target) - 1;
        let (mut lo, mut hi) = (self.ws[k], self.ws[k + 1]);
        let span = table[k + 1] - table[k];
        let mut w = if span > 0.0 {
            lo + (hi - lo) * (target - table[k]) / span
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..200 {
            let r = map(w)? - target;
            if r == 0.0 {
                return Ok(w);
            }
            if r < 0.0 {
                lo = w;
            } else {
                hi = w;
            }
            let d = slope(w);
            let mut next = if d > 0.0 { w - r / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - w).abs() <= 4.0 * f64::EPSILON * self.top() || hi - lo <= 4.0 * f64::EPSILON * self.top() {
                return Ok(next);
            }
            w = next;
        }
        Err(Error::Bracket(format!("parametric inversion did not settle for target {target}")))
    }

    fn w_for_x(&self, x: f64) -> Result<f64> {
        let table: Vec<f64> = self.p.iter().map(|p| p / (2.0 * self.i0)).collect();
        self.invert(x, &table, |w| self.x_at(w), |w| g_prime(self.a - w * w) / self.i0)
    }

    fn w_for_u(&self, u: f64) -> Result<f64> {
        let table: Vec<f64> = self.q.iter().map(|q| q / (2.0 * self.i0)).collect();
        self.invert(
            u,
            &table,
            |w| self.u_at(w),
            |w| {
                let z = self.a - w * w;
                z * g_prime(z) / self.i0
            },
        )
    }

    /// `E = 8 I₀ ∫₀^{√A} w² g(A − w²) dw`; along the profile `G(u′)′ = −2 I₀ w`.
    fn energy(&self) -> Result<f64> {
        let a = self.a;
        let integral = quad(|w| w * w * g_prime(a - w * w), 0.0, self.top(), QUAD_TOL * 1e-3, QUAD_TOL)?;
        Ok(8.0 * self.i0 * integral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalResiduals {
    /// Smallest first variation over the admissible direction family.
    pub vi_residual: f64,
    /// `1 + ‖∂E_h/∂u_i‖_∞`, the magnitude the VI residual is measured against.
    pub vi_scale: f64,
    /// `max |u′ − J(u)|` on `[0.05, 0.45]`.
    pub ode_residual: f64,
    /// `min −u″` over interior nodes; positive for a strictly concave profile.
    pub concavity_min: f64,
    /// `|H(A) − height|`.
    pub round_trip: f64,
    /// `|u(½) − height|` (zero when `½` is not a node).
    pub midpoint_error: f64,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub height: f64,
    /// Initial slope `u′(0) = H⁻¹(height)`.
    pub a: f64,
    pub grid: UniformGrid,
    pub obstacle: Obstacle,
    pub profile: GridFunction,
    pub slope_profile: GridFunction,
    /// Discrete energy `E_h` of the sampled profile.
    pub energy: f64,
    /// Energy of the continuous profile.
    pub continuous_energy: f64,
    pub residuals: CriticalResiduals,
    param: Parametrization,
}

/// Computes the symmetric critical point over the cone `ψ(½) = height`,
/// `ψ(0) = ψ(1) = −height`, sampled on `grid`.
pub fn critical_profile(height: f64, grid: UniformGrid) -> Result<CriticalPoint> {
    critical_profile_with_samples(height, grid, PARAMETRIC_SAMPLES)
}

pub fn critical_profile_with_samples(height: f64, grid: UniformGrid, samples: usize) -> Result<CriticalPoint> {
    if samples < 512 {
        return Err(Error::Parameter(format!("at least 512 parametric samples are needed, got {samples}")));
    }
    let a = h_inv(height)?;
    let param = Parametrization::new(a, samples)?;
    let n = grid.n();
    let mut u = vec![0.0; n + 1];
    let mut slope = vec![0.0; n + 1];
    for i in 1..=n / 2 {
        let w = if 2 * i == n {
            param.top()
        } else {
            param.w_for_x(grid.x(i))?
        };
        u[i] = param.u_at(w)?;
        slope[i] = a - w * w;
    }
    slope[0] = a;
    for i in n / 2 + 1..=n {
        u[i] = u[n - i];
        slope[i] = -slope[n - i];
    }
    if n % 2 == 0 {
        slope[n / 2] = 0.0;
    }
    let profile = GridFunction::new(grid, u)?;
    let slope_profile = GridFunction::new(grid, slope)?;
    let obstacle = Obstacle::cone(grid, height)?;
    let mut cp = CriticalPoint {
        height,
        a,
        grid,
        energy: energy(&profile)?,
        continuous_energy: param.energy()?,
        obstacle,
        profile,
        slope_profile,
        residuals: CriticalResiduals {
            vi_residual: 0.0,
            vi_scale: 1.0,
            ode_residual: 0.0,
            concavity_min: 0.0,
            round_trip: (h_of_A(a)? - height).abs(),
            midpoint_error: 0.0,
        },
        param,
    };
    if n % 2 == 0 {
        cp.residuals.midpoint_error = (cp.profile.values()[n / 2] - height).abs();
    }
    cp.residuals.ode_residual = ode_residual(&cp)?;
    let check = check_critical_with(&cp.profile, &cp.obstacle, 0.0, &cp.tangent_directions()?)?;
    cp.residuals.vi_residual = check.vi_residual;
    cp.residuals.vi_scale = check.scale;
    cp.residuals.concavity_min = check.concavity_min;
    Ok(cp)
}

impl CriticalPoint {
    /// `J(v)`: the slope of the profile at the point of the rising half where `u = v`.
    pub fn slope_at_height(&self, value: f64) -> Result<f64> {
        if !(0.0..=self.height * (1.0 + 1e-9)).contains(&value) {
            return Err(Error::Bracket(format!(
                "value {value} is outside the profile range [0, {}]",
                self.height
            )));
        }
        let w = self.param.w_for_u(value)?;
        Ok(self.a - w * w)
    }

    /// Position `x ∈ [0, ½]` where the profile has slope `z`.
    pub fn position_of_slope(&self, z: f64) -> Result<f64> {
        if !(0.0..=self.a).contains(&z) {
            return Err(Error::Domain(format!("slope {z} outside [0, A = {}]", self.a)));
        }
        self.param.x_at((self.a - z).sqrt())
    }

    /// Whether every interior second difference on `(0, ½]` is negative.
    pub fn strictly_concave_on_left_half(&self) -> bool {
        let q = second_diff(&self.profile);
        let n = self.grid.n();
        (1..=n / 2).all(|i| q[i - 1] < 0.0)
    }

    /// Admissible directions `v − u` built from the construction: the
    /// profiles of slightly taller cones and the dilation `(1 + t) u`.
    pub fn tangent_directions(&self) -> Result<Vec<GridFunction>> {
        let mut out = vec![self.profile.clone()];
        for &rel in &[1e-3, 1e-2] {
            let taller = critical_profile_core(self.height * (1.0 + rel), self.grid)?;
            out.push(taller.sub(&self.profile)?);
        }
        Ok(out)
    }
}

// Profile values only, used for the tangent directions.
fn critical_profile_core(height: f64, grid: UniformGrid) -> Result<GridFunction> {
    let a = h_inv(height)?;
    let param = Parametrization::new(a, PARAMETRIC_SAMPLES)?;
    let n = grid.n();
    let mut u = vec![0.0; n + 1];
    for i in 1..=n / 2 {
        let w = if 2 * i == n { param.top() } else { param.w_for_x(grid.x(i))? };
        u[i] = param.u_at(w)?;
    }
    for i in n / 2 + 1..=n {
        u[i] = u[n - i];
    }
    GridFunction::new(grid, u)
}

/// `max |u′(x_i) − J(u(x_i))|` over nodes with `x_i ∈ [0.05, 0.45]`, where
/// `J` comes from inverting the height map `w ↦ u(w)`.
pub fn ode_residual(cp: &CriticalPoint) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..cp.grid.nodes() {
        let x = cp.grid.x(i);
        if !(0.05..=0.45).contains(&x) {
            continue;
        }
        let j = cp.slope_at_height(cp.profile.values()[i])?;
        worst = worst.max((cp.slope_profile.values()[i] - j).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCheck {
    /// `min DE_h(u)(v - u)` over `v = max(u ± e_i, psi)` and the supplied
    /// extra directions (normalized to unit max norm).
    pub vi_residual: f64,
    /// Coordinate direction or extra direction attaining the minimum.
    pub worst_direction: String,
    pub scale: f64,
    pub tolerance: f64,
    pub concavity_min: f64,
    pub min_value: f64,
    pub nonnegative: bool,
    pub coincidence: Vec<usize>,
    pub passes: bool,
}

/// Checks the discrete variational inequality, concavity and sign of `u`.
/// `tol` is relative: the VI residual must be at least `−tol · scale`.
pub fn check_critical(u: &GridFunction, obstacle: &Obstacle, tol: f64) -> Result<CriticalCheck> {
    check_critical_with(u, obstacle, tol, &[])
}

pub fn check_critical_with(
    u: &GridFunction,
    obstacle: &Obstacle,
    tol: f64,
    extra: &[GridFunction],
) -> Result<CriticalCheck> {
    if !obstacle.admits(u) {
        return Err(Error::Precondition("candidate is not admissible for the obstacle".into()));
    }
    let grid = u.grid();
    let n = grid.n();
    let grad = energy_nodal_gradient(u)?;
    let scale = 1.0 + grad.iter().fold(0.0, |m: f64, g| m.max(g.abs()));
    let psi = obstacle.values();
    let v = u.values();
    let coincidence: Vec<usize> = (1..n).filter(|&i| v[i] - psi[i] <= CONTACT_TOL).collect();
    let mut vi = f64::INFINITY;
    let mut worst = String::new();
    for i in 1..n {
        if grad[i] < vi {
            vi = grad[i];
            worst = format!("+e{i}");
        }
        let down = (v[i] - psi[i]).clamp(0.0, 1.0);
        if down > CONTACT_TOL && -down * grad[i] < vi {
            vi = -down * grad[i];
            worst = format!("-e{i}");
        }
    }
    for (k, d) in extra.iter().enumerate() {
        let norm = d.max_abs();
        if norm == 0.0 {
            continue;
        }
        let value: f64 = d.values().iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() / norm;
        if value < vi {
            vi = value;
            worst = format!("extra{k}");
        }
    }
    if !vi.is_finite() {
        vi = 0.0;
    }
    let q = second_diff(u);
    let concavity_min = q.iter().fold(f64::INFINITY, |m, q| m.min(-q));
    let min_value = v.iter().copied().fold(f64::INFINITY, f64::min);
    let tolerance = tol * scale;
    Ok(CriticalCheck {
        vi_residual: vi,
        worst_direction: worst,
        scale,
        tolerance,
        concavity_min,
        min_value,
        nonnegative: min_value >= 0.0,
        coincidence,
        passes: vi >= -tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::first_variation;

    fn grid(n: usize) -> UniformGrid {
        UniformGrid::new(n).unwrap()
    }

    #[test]
    fn f_of_z_endpoints_and_monotonicity() {
        assert_eq!(f_of_z(1.0, 1.0).unwrap(), 0.0);
        assert!((f_of_z(0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let values: Vec<f64> = (0..50).map(|k| f_of_z(k as f64 / 49.0, 1.0).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(f_of_z(1.1, 1.0).is_err());
        assert!(f_of_z(-0.1, 1.0).is_err());
    }

    #[test]
    fn profile_structure() {
        let cp = critical_profile(0.05, grid(400)).unwrap();
        let u = cp.profile.values();
        assert_eq!(u[0], 0.0);
        assert_eq!(u[400], 0.0);
        assert!((u[200] - 0.05).abs() < 1e-9);
        assert!(cp.residuals.round_trip < 1e-10);
        assert!((0..=400).all(|i| u[i] == u[400 - i]));
        assert!(cp.strictly_concave_on_left_half());
        assert!(u.iter().all(|&v| v >= 0.0));
        assert!(cp.residuals.ode_residual <= 1e-6);
        assert!(cp.slope_at_height(0.05).unwrap().abs() < 1e-7);
        let slopes = cp.slope_profile.values();
        assert!((1..=200).all(|i| slopes[i] < slopes[i - 1]));
    }

    #[test]
    fn continuous_energy_matches_sampled() {
        // mpmath: A = 0.150644994430852, E = 0.118474241723900
        let cp = critical_profile(0.05, grid(400)).unwrap();
        assert!((cp.a - 0.150_644_994_430_852).abs() < 1e-12);
        assert!((cp.continuous_energy - 0.118_474_241_723_900).abs() < 1e-12);
        assert!((cp.energy - cp.continuous_energy).abs() < 2e-3 * cp.continuous_energy);
    }

    #[test]
    fn position_matches_f_of_z() {
        let cp = critical_profile(0.05, grid(64)).unwrap();
        let z = 0.3 * cp.a;
        let x = cp.position_of_slope(z).unwrap();
        assert!((x - f_of_z(z, cp.a).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn zero_is_unconstrained_critical() {
        let g = grid(32);
        let check = check_critical(&GridFunction::zeros(g), &Obstacle::constant(g, -1.0), 1e-12).unwrap();
        assert_eq!(check.vi_residual, 0.0);
        assert!(check.passes);
        assert!(check.coincidence.is_empty());
    }

    #[test]
    fn parabola_is_not_critical_over_cone() {
        let g = grid(200);
        let u = GridFunction::from_fn(g, |x| x * (1.0 - x)).unwrap();
        let mut v = u.into_values();
        v[200] = 0.0;
        let u = GridFunction::new(g, v).unwrap();
        let check = check_critical(&u, &Obstacle::cone(g, 0.05).unwrap(), 1e-5).unwrap();
        assert!(!check.passes, "{check:?}");
    }

    #[test]
    fn first_variation_pairs_with_nodal_gradient() {
        let cp = critical_profile(0.05, grid(100)).unwrap();
        let d = cp.tangent_directions().unwrap();
        let grad = energy_nodal_gradient(&cp.profile).unwrap();
        for dir in &d {
            let pairing: f64 = dir.values().iter().zip(&grad).map(|(a, b)| a * b).sum();
            let fv = first_variation(&cp.profile, dir).unwrap();
            assert!((pairing - fv).abs() < 1e-10 * (1.0 + fv.abs()));
        }
    }

    #[test]
    fn smooth_admissible_directions_satisfy_the_inequality() {
        use rand::{Rng, SeedableRng};
        let g = grid(400);
        let cp = critical_profile(0.05, g).unwrap();
        let psi = cp.obstacle.values();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let scale = cp.residuals.vi_scale;
        for _ in 0..100 {
            let coeffs: Vec<f64> = (1..=6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = rng.gen_range(1e-4..1e-2);
            let mut phi: Vec<f64> = (0..=400)
                .map(|i| {
                    let x = g.x(i);
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * x).sin())
                        .sum()
                })
                .collect();
            // lift so that φ(½) ≥ 0, then shrink t until u + tφ clears the cone
            let lift = (-phi[200]).max(0.0);
            for (i, p) in phi.iter_mut().enumerate() {
                *p += lift * (std::f64::consts::PI * g.x(i)).sin();
            }
            phi[0] = 0.0;
            phi[400] = 0.0;
            let mut t = t;
            while (0..=400).any(|i| cp.profile.values()[i] + t * phi[i] < psi[i]) {
                t *= 0.5;
            }
            let dir = GridFunction::new(g, phi.iter().map(|p| t * p).collect()).unwrap();
            let fv = first_variation(&cp.profile, &dir).unwrap();
            assert!(fv >= -1e-3 * scale * dir.max_abs(), "{fv}");
        }
    }
}
