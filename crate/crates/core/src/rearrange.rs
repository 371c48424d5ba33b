//! Rearrangements of sampled functions and the nonlinear Talenti comparison.
//!
//! A grid function is read as a step function with `n + 1` cells of equal
//! measure, one per node. Its decreasing rearrangement is then the sorted
//! sequence of nodal values, and the symmetric rearrangement samples
//! `f*(2|x − ½|)` at the nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{GridFunction, UniformGrid};
use crate::error::{Error, Result};
use crate::specialfn::{c0, g, g_guard, g_inv};

fn check_nonnegative(f: &GridFunction) -> Result<()> {
    if let Some(i) = f.values().iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Domain(format!(
            "rearrangement needs a nonnegative function; node {i} holds {}",
            f.values()[i]
        )));
    }
    Ok(())
}

/// `f*`: nodal values sorted in nonincreasing order.
pub fn decreasing_rearrangement(f: &GridFunction) -> Result<GridFunction> {
    check_nonnegative(f)?;
    let mut values = f.values().to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    GridFunction::new(f.grid(), values)
}

/// `f_*(x_i) = f*(2|x_i − ½|)`; the folded point is always a node.
pub fn symmetric_rearrangement(f: &GridFunction) -> Result<GridFunction> {
    let star = decreasing_rearrangement(f)?;
    Ok(fold(&star))
}

fn fold(star: &GridFunction) -> GridFunction {
    let grid = star.grid();
    let values = (0..grid.nodes()).map(|i| star.values()[grid.folded_index(i)]).collect();
    GridFunction::new(grid, values).expect("folded samples stay finite")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangedPair {
    pub f_star: GridFunction,
    pub f_sym: GridFunction,
}

pub fn rearrange(f: &GridFunction) -> Result<RearrangedPair> {
    let f_star = decreasing_rearrangement(f)?;
    let f_sym = fold(&f_star);
    Ok(RearrangedPair { f_star, f_sym })
}

/// `L^p` norm of the step-function reading of `f` (cells of measure `1/(n+1)`).
pub fn step_norm(f: &GridFunction, p: f64) -> f64 {
    let v = f.values();
    if p.is_infinite() {
        return f.max_abs();
    }
    let m = v.len() as f64;
    (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() / m).powf(1.0 / p)
}

/// `L^p` norm of the continuous symmetric rearrangement `x ↦ f*(2|x − ½|)`
/// of the step-function reading of `f`, integrated piece by piece in `x`.
pub fn symmetric_step_norm(f: &GridFunction, p: f64) -> Result<f64> {
    let star = decreasing_rearrangement(f)?;
    let v = star.values();
    if p.is_infinite() {
        return Ok(v[0]);
    }
    // on |x − ½| ∈ [k, k+1)/(2m) the composition equals the k-th sorted value
    let m = v.len() as f64;
    let piece = 1.0 / (2.0 * m);
    let total: f64 = v.iter().map(|x| 2.0 * piece * x.powf(p)).sum();
    Ok(total.powf(1.0 / p))
}

fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for j in 1..values.len() {
        out[j] = out[j - 1] + 0.5 * h * (values[j - 1] + values[j]);
    }
    out
}

/// Symmetric comparison function
/// `v(x) = ½ ∫_{2|x−½|}^1 G⁻¹(½ ∫₀^s f*(r) dr) ds`, which solves
/// `−G(v′)′ = f_*` with `v(0) = v(1) = 0`.
pub fn talenti_comparison(f: &GridFunction) -> Result<GridFunction> {
    check_nonnegative(f)?;
    let grid = f.grid();
    let h = grid.h();
    let l2 = crate::discretization::l2_norm(f);
    if 0.5 * l2 > 0.5 * c0() - g_guard() {
        return Err(Error::Precondition(format!(
            "½‖f‖_L² = {} exceeds c₀/2 − guard = {}",
            0.5 * l2,
            0.5 * c0() - g_guard()
        )));
    }
    let star = decreasing_rearrangement(f)?;
    let mass: Vec<f64> = cumulative_trapezoid(star.values(), h).iter().map(|m| 0.5 * m).collect();
    let inner = mass.iter().map(|&m| g_inv(m)).collect::<Result<Vec<f64>>>()?;
    // V(y) = ½ ∫_y^1 inner, accumulated from the right end
    let n = grid.n();
    let mut tail = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tail[j] = tail[j + 1] + 0.25 * h * (inner[j] + inner[j + 1]);
    }
    let values = (0..=n).map(|i| tail[grid.folded_index(i)]).collect();
    GridFunction::new(grid, values)
}

/// `f = −G(u′)′` from cell slopes: `f_i = −(G(s_{i+½}) − G(s_{i−½}))/h`,
/// with the end values copied from their neighbours.
pub fn talenti_source(u: &GridFunction) -> Result<GridFunction> {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    let v = u.values();
    let gs = (0..n).map(|k| g((v[k + 1] - v[k]) / h)).collect::<Result<Vec<f64>>>()?;
    let mut f = vec![0.0; n + 1];
    for i in 1..n {
        f[i] = -(gs[i] - gs[i - 1]) / h;
    }
    f[0] = f[1];
    f[n] = f[n - 1];
    GridFunction::new(grid, f)
}

/// Largest slope magnitude for which `1/G⁻¹` stays convex.
pub const TALENTI_MAX_SLOPE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TalentiReport {
    /// `min_i (v_i − (u_*)_i)`.
    pub min_gap: f64,
    /// `5h(1 + ‖f‖_∞)`.
    pub tol_mesh: f64,
    pub f_max: f64,
    pub passes: bool,
}

/// Compares `u_*` with the symmetric solution `v` driven by `f_*`, where
/// `f = −G(u′)′`; the comparison principle asserts `v ≥ u_*`.
pub fn talenti_inequality_check(u: &GridFunction) -> Result<TalentiReport> {
    talenti_details(u).map(|(report, _, _, _)| report)
}

/// Same as [`talenti_inequality_check`], also returning `(f, v, u_*)`.
pub fn talenti_details(u: &GridFunction) -> Result<(TalentiReport, GridFunction, GridFunction, GridFunction)> {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    let v = u.values();
    if !u.has_dirichlet_ends() {
        return Err(Error::Precondition("u must vanish at both ends".into()));
    }
    if v.iter().any(|x| *x < 0.0) {
        return Err(Error::Precondition("u must be nonnegative".into()));
    }
    let slope_tol = 1e-12 * (1.0 + u.max_abs() / h);
    let mut previous = f64::INFINITY;
    for k in 0..n {
        let s = (v[k + 1] - v[k]) / h;
        if s.abs() > TALENTI_MAX_SLOPE + slope_tol {
            return Err(Error::Precondition(format!(
                "slope {s} on cell {k} leaves the window |u′| ≤ {TALENTI_MAX_SLOPE}"
            )));
        }
        if s > previous + slope_tol {
            return Err(Error::Precondition(format!("u is not concave at node {k}")));
        }
        previous = s;
    }
    let f = talenti_source(u)?;
    let f = GridFunction::new(grid, f.values().iter().map(|x| x.max(0.0)).collect())?;
    let comparison = talenti_comparison(&f)?;
    let u_sym = symmetric_rearrangement(u)?;
    let min_gap = comparison
        .values()
        .iter()
        .zip(u_sym.values())
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    let f_max = f.max_abs();
    let tol_mesh = 5.0 * h * (1.0 + f_max);
    Ok((
        TalentiReport {
            min_gap,
            tol_mesh,
            f_max,
            passes: min_gap >= -tol_mesh,
        },
        f,
        comparison,
        u_sym,
    ))
}

/// `(1/G⁻¹)″(s) = (2 − ½G⁻¹(s)²) / G⁻¹(s)³ · (1 + G⁻¹(s)²)^{3/2}`.
pub fn one_over_ginv_second_derivative(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 0.5 * c0()) {
        return Err(Error::OutOfRange {
            value: s,
            detail: format!("(1/G⁻¹)″ is evaluated on (0, c₀/2 = {})", 0.5 * c0()),
        });
    }
    let y = g_inv(s)?;
    Ok((2.0 - 0.5 * y * y) / y.powi(3) * (1.0 + y * y).powf(1.5))
}

/// Random concave profile with `u(0) = u(1) = 0` and `|u′| ≤ 2`: sorted
/// decreasing cell slopes drawn from a random subinterval of `[−1, 1]`,
/// shifted by their mean so that the profile closes at `x = 1`.
pub fn random_concave<R: Rng + ?Sized>(grid: UniformGrid, rng: &mut R) -> GridFunction {
    let n = grid.n();
    let h = grid.h();
    let lo = rng.gen_range(-1.0..-0.05);
    let hi = rng.gen_range(0.05..1.0);
    let mut slopes: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mean = slopes.iter().sum::<f64>() / n as f64;
    let mut values = vec![0.0; n + 1];
    for k in 0..n {
        values[k + 1] = values[k] + h * (slopes[k] - mean);
    }
    values[n] = 0.0;
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    GridFunction::new(grid, values).expect("finite by construction")
}
