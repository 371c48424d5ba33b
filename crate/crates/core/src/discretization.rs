//! Nodal finite differences on a uniform grid of `[0, 1]` and the discrete
//! elastic energy
//!
//! ```text
//! E_h(u) = Σ_i ω_i q_i² / (1 + p_i²)^{5/2},
//! ```
//!
//! where `q_i`, `p_i` are second and first differences and `ω_i` are the
//! trapezoid weights. At the two end nodes `q` is the second-order one-sided
//! extrapolation `(2u₀ − 5u₁ + 4u₂ − u₃)/h²`, which is `2q₁ − q₂`; it vanishes
//! to leading order on profiles obeying the Navier condition, so the
//! Euler–Lagrange system keeps the natural boundary behaviour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformGrid {
    n: usize,
}

impl UniformGrid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_CELLS {
            return Err(Error::Parameter(format!(
                "grid needs at least {} cells, got {n}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { n })
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    /// `½ − x_i`, computed from integers so that nodes `i` and `n − i` give
    /// exactly opposite values.
    pub fn offset_from_mid(&self, i: usize) -> f64 {
        (self.n as f64 - 2.0 * i as f64) / (2.0 * self.n as f64)
    }

    /// Node index of `2|x_i − ½|`, which always lands on the grid.
    pub fn folded_index(&self, i: usize) -> usize {
        (2 * i).abs_diff(self.n)
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n {
            0.5 * self.h()
        } else {
            self.h()
        }
    }
}

/// Nodal values of a function on a [`UniformGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::Shape(format!(
                "grid with {} cells needs {} values, got {}",
                grid.n(),
                grid.nodes(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {} at node {i}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.nodes()],
        }
    }

    pub fn constant(grid: UniformGrid, level: f64) -> Self {
        Self {
            grid,
            values: vec![level; grid.nodes()],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: UniformGrid, f: F) -> Result<Self> {
        let values = (0..grid.nodes()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn try_from_fn<F: Fn(f64) -> Result<f64>>(grid: UniformGrid, f: F) -> Result<Self> {
        let values = (0..grid.nodes()).map(|i| f(grid.x(i))).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    /// Samples `u_c` with mirror-exact offsets, so the result is exactly
    /// symmetric and vanishes at both ends.
    pub fn u_c(grid: UniformGrid, c: f64) -> Result<Self> {
        crate::specialfn::check_uc_parameter(c)?;
        let n = grid.n();
        let mut values = (0..grid.nodes())
            .map(|i| crate::specialfn::uc_from_offset(c, grid.offset_from_mid(i)))
            .collect::<Result<Vec<_>>>()?;
        values[0] = 0.0;
        values[n] = 0.0;
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: UniformGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.nodes());
        Self { grid, values }
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `u(1 − x)`.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn has_dirichlet_ends(&self) -> bool {
        self.values[0] == 0.0 && self.values[self.grid.n()] == 0.0
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_grid(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `(1 − θ) self + θ other`.
    pub fn lerp(&self, other: &Self, theta: f64) -> Result<Self> {
        check_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }
}

pub(crate) fn check_same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Shape(format!(
            "grid mismatch: {} vs {} cells",
            a.grid.n(),
            b.grid.n()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ObstacleKind {
    /// Symmetric, affine on `[0, ½]`, `ψ(½) = height`, `ψ(0) = ψ(1) = foot`.
    Cone { height: f64, foot: f64 },
    Table,
    Constant { level: f64 },
}

/// An obstacle sampled on the grid; admissible functions satisfy `u_i ≥ ψ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub samples: GridFunction,
    pub assumption1_ok: bool,
}

impl Obstacle {
    /// Cone with `ψ(0) = ψ(1) = −height`.
    pub fn cone(grid: UniformGrid, height: f64) -> Result<Self> {
        Self::cone_with_foot(grid, height, -height)
    }

    pub fn cone_with_foot(grid: UniformGrid, height: f64, foot: f64) -> Result<Self> {
        if !(height > 0.0) || !height.is_finite() || !foot.is_finite() || foot >= height {
            return Err(Error::Parameter(format!(
                "cone needs finite height > 0 above its foot, got height {height}, foot {foot}"
            )));
        }
        let values = (0..grid.nodes())
            .map(|i| {
                let dist = 2.0 * grid.offset_from_mid(i).abs();
                foot + (height - foot) * (1.0 - dist)
            })
            .collect();
        Ok(Self::from_samples(
            ObstacleKind::Cone { height, foot },
            GridFunction::new(grid, values)?,
        ))
    }

    pub fn constant(grid: UniformGrid, level: f64) -> Self {
        Self::from_samples(ObstacleKind::Constant { level }, GridFunction::constant(grid, level))
    }

    pub fn table(samples: GridFunction) -> Self {
        Self::from_samples(ObstacleKind::Table, samples)
    }

    fn from_samples(kind: ObstacleKind, samples: GridFunction) -> Self {
        let v = samples.values();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let assumption1_ok = v[0] < 0.0 && v[v.len() - 1] < 0.0 && max > 0.0;
        Self {
            kind,
            samples,
            assumption1_ok,
        }
    }

    pub fn grid(&self) -> UniformGrid {
        self.samples.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }

    /// Whether `u ≥ ψ` nodewise with zero ends.
    pub fn admits(&self, u: &GridFunction) -> bool {
        u.grid() == self.grid()
            && u.has_dirichlet_ends()
            && u.values().iter().zip(self.values()).all(|(a, b)| a >= b)
    }

    pub fn is_symmetric(&self) -> bool {
        let v = self.values();
        let n = v.len() - 1;
        (0..=n).all(|i| v[i] == v[n - i])
    }
}

/// Central differences inside, second-order one-sided differences at the ends.
pub fn first_diff(u: &GridFunction) -> GridFunction {
    let v = u.values();
    let n = u.grid().n();
    let h = u.grid().h();
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    out[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
    GridFunction::from_parts_unchecked(u.grid(), out)
}

/// `(u_{i+1} − 2u_i + u_{i−1})/h²` at the interior nodes `1..n−1`; entry `k`
/// belongs to node `k + 1`.
pub fn second_diff(u: &GridFunction) -> Vec<f64> {
    let v = u.values();
    let n = u.grid().n();
    let h2 = u.grid().h().powi(2);
    (1..n).map(|i| (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2).collect()
}

/// One-sided second-order estimates of `u''` at `x = 0` and `x = 1`.
pub fn endpoint_curvature(u: &GridFunction) -> (f64, f64) {
    let v = u.values();
    let n = u.grid().n();
    let h2 = u.grid().h().powi(2);
    let left = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
    let right = (2.0 * v[n] - 5.0 * v[n - 1] + 4.0 * v[n - 2] - v[n - 3]) / h2;
    (left, right)
}

/// Second differences at every node, the ends from [`endpoint_curvature`].
fn curvature_all(u: &GridFunction) -> Vec<f64> {
    let n = u.grid().n();
    let mut q = Vec::with_capacity(n + 1);
    let (left, right) = endpoint_curvature(u);
    q.push(left);
    q.extend(second_diff(u));
    q.push(right);
    q
}

fn check_finite(u: &GridFunction) -> Result<()> {
    if let Some(i) = u.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at node {i}")));
    }
    Ok(())
}

/// `A_u = u''/(1 + u'²)^{5/4}` at every node; `E_h(u) = Σ ω_i (A_u)_i²`.
pub fn a_u(u: &GridFunction) -> GridFunction {
    let p = first_diff(u);
    let q = curvature_all(u);
    let values = q
        .iter()
        .zip(p.values())
        .map(|(q, p)| q * (1.0 + p * p).powf(-1.25))
        .collect();
    GridFunction::from_parts_unchecked(u.grid(), values)
}

pub fn energy(u: &GridFunction) -> Result<f64> {
    check_finite(u)?;
    let a = a_u(u);
    let grid = u.grid();
    Ok(a.values().iter().enumerate().map(|(i, a)| grid.weight(i) * a * a).sum())
}

/// A sparse row: `(node, coefficient)` pairs.
type Stencil = [(usize, f64); 4];

/// Per-node data for the chain rule: `r_i = A_u(x_i)` and its gradient row
/// `∂r_i/∂u` with at most four nonzeros.
struct Residuals {
    r: Vec<f64>,
    rows: Vec<Stencil>,
}

fn residuals(u: &GridFunction) -> Residuals {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    let h2 = h * h;
    let p = first_diff(u);
    let q = curvature_all(u);
    let mut r = Vec::with_capacity(n + 1);
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let pi = p.values()[i];
        let s = 1.0 + pi * pi;
        let alpha = s.powf(-1.25);
        let beta = -2.5 * q[i] * pi * s.powf(-2.25);
        r.push(q[i] * alpha);
        // q stencil (over 1/h²) and p stencil (over 2h), merged by node
        let row: Stencil = if i == 0 {
            [
                (0, alpha * 2.0 / h2 + beta * -3.0 / (2.0 * h)),
                (1, alpha * -5.0 / h2 + beta * 4.0 / (2.0 * h)),
                (2, alpha * 4.0 / h2 + beta * -1.0 / (2.0 * h)),
                (3, alpha * -1.0 / h2),
            ]
        } else if i == n {
            [
                (n, alpha * 2.0 / h2 + beta * 3.0 / (2.0 * h)),
                (n - 1, alpha * -5.0 / h2 + beta * -4.0 / (2.0 * h)),
                (n - 2, alpha * 4.0 / h2 + beta * 1.0 / (2.0 * h)),
                (n - 3, alpha * -1.0 / h2),
            ]
        } else {
            [
                (i - 1, alpha / h2 - beta / (2.0 * h)),
                (i, -2.0 * alpha / h2),
                (i + 1, alpha / h2 + beta / (2.0 * h)),
                (i, 0.0),
            ]
        };
        rows.push(row);
    }
    Residuals { r, rows }
}

/// Derivative of `E_h` with respect to each nodal value (no `h` scaling);
/// end components are zeroed.
pub fn energy_nodal_gradient(u: &GridFunction) -> Result<Vec<f64>> {
    check_finite(u)?;
    let grid = u.grid();
    let n = grid.n();
    let res = residuals(u);
    let mut grad = vec![0.0; n + 1];
    for (i, (r, row)) in res.r.iter().zip(&res.rows).enumerate() {
        let factor = 2.0 * grid.weight(i) * r;
        for &(j, c) in row {
            grad[j] += factor * c;
        }
    }
    grad[0] = 0.0;
    grad[n] = 0.0;
    Ok(grad)
}

/// L²-gradient of `E_h`: the nodal gradient divided by the trapezoid
/// weight, so that `⟨∇E_h(u), φ⟩_h` is the directional derivative for every
/// `φ` vanishing at the ends. Ends are fixed to zero.
pub fn energy_gradient(u: &GridFunction) -> Result<GridFunction> {
    let h = u.grid().h();
    let values = energy_nodal_gradient(u)?.into_iter().map(|g| g / h).collect();
    Ok(GridFunction::from_parts_unchecked(u.grid(), values))
}

/// `DE_h(u)(φ) = Σ ω_i [2 q_i δq_i (1+p_i²)^{-5/2} − 5 q_i² p_i δp_i (1+p_i²)^{-7/2}]`,
/// the discrete quadrature of the two first-variation integrals with
/// `δq, δp` the differences of `φ`.
pub fn first_variation(u: &GridFunction, phi: &GridFunction) -> Result<f64> {
    check_same_grid(u, phi)?;
    check_finite(u)?;
    check_finite(phi)?;
    let grid = u.grid();
    let p = first_diff(u);
    let q = curvature_all(u);
    let dp = first_diff(phi);
    let dq = curvature_all(phi);
    let mut total = 0.0;
    for i in 0..grid.nodes() {
        let pi = p.values()[i];
        let s = 1.0 + pi * pi;
        let bending = 2.0 * q[i] * dq[i] * s.powf(-2.5);
        let stretching = 5.0 * q[i] * q[i] * pi * dp.values()[i] * s.powf(-3.5);
        total += grid.weight(i) * (bending - stretching);
    }
    Ok(total)
}

pub fn l2_inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    check_same_grid(u, v)?;
    let grid = u.grid();
    Ok(u.values()
        .iter()
        .zip(v.values())
        .enumerate()
        .map(|(i, (a, b))| grid.weight(i) * a * b)
        .sum())
}

pub fn l2_norm(u: &GridFunction) -> f64 {
    l2_inner(u, u).expect("same grid").sqrt()
}

pub fn l2_distance(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    Ok(l2_norm(&u.sub(v)?))
}

/// Symmetric pentadiagonal matrix over the interior nodes `1..n−1`
/// (index `k` ↔ node `k + 1`): `diag[k]`, `off1[k] = M[k][k+1]`, `off2[k] = M[k][k+2]`.
#[derive(Debug, Clone)]
pub struct Pentadiagonal {
    pub diag: Vec<f64>,
    pub off1: Vec<f64>,
    pub off2: Vec<f64>,
}

impl Pentadiagonal {
    pub fn zeros(m: usize) -> Self {
        Self {
            diag: vec![0.0; m],
            off1: vec![0.0; m.saturating_sub(1)],
            off2: vec![0.0; m.saturating_sub(2)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn add(&mut self, a: usize, b: usize, value: f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        match hi - lo {
            0 => self.diag[lo] += value,
            1 => self.off1[lo] += value,
            2 => self.off2[lo] += value,
            _ => unreachable!("stencil wider than the band"),
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let mut y = vec![0.0; m];
        for k in 0..m {
            let mut acc = self.diag[k] * x[k];
            if k + 1 < m {
                acc += self.off1[k] * x[k + 1];
            }
            if k >= 1 {
                acc += self.off1[k - 1] * x[k - 1];
            }
            if k + 2 < m {
                acc += self.off2[k] * x[k + 2];
            }
            if k >= 2 {
                acc += self.off2[k - 2] * x[k - 2];
            }
            y[k] = acc;
        }
        y
    }

    /// Solves `M x = b` by banded `LDLᵀ`; `None` if a pivot is not positive.
    pub fn solve_spd(&self, b: &[f64]) -> Option<Vec<f64>> {
        let m = self.dim();
        // L has unit diagonal and two subdiagonals l1[k] = L[k+1][k], l2[k] = L[k+2][k]
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m.saturating_sub(1)];
        let mut l2 = vec![0.0; m.saturating_sub(2)];
        for k in 0..m {
            let mut dk = self.diag[k];
            if k >= 1 {
                dk -= l1[k - 1] * l1[k - 1] * d[k - 1];
            }
            if k >= 2 {
                dk -= l2[k - 2] * l2[k - 2] * d[k - 2];
            }
            if !(dk > 0.0) {
                return None;
            }
            d[k] = dk;
            if k + 1 < m {
                let mut a = self.off1[k];
                if k >= 1 {
                    a -= l2[k - 1] * l1[k - 1] * d[k - 1];
                }
                l1[k] = a / dk;
            }
            if k + 2 < m {
                l2[k] = self.off2[k] / dk;
            }
        }
        let mut y = b.to_vec();
        for k in 0..m {
            if k >= 1 {
                y[k] -= l1[k - 1] * y[k - 1];
            }
            if k >= 2 {
                y[k] -= l2[k - 2] * y[k - 2];
            }
        }
        for k in 0..m {
            y[k] /= d[k];
        }
        for k in (0..m).rev() {
            if k + 1 < m {
                y[k] -= l1[k] * y[k + 1];
            }
            if k + 2 < m {
                y[k] -= l2[k] * y[k + 2];
            }
        }
        Some(y)
    }
}

/// Gauss–Newton approximation `Σ 2 ω_i ∇r_i ∇r_iᵀ` of the Hessian of `E_h`
/// in the L² metric (divided by `h`), restricted to the interior nodes.
/// Positive semidefinite by construction.
pub fn gauss_newton_hessian(u: &GridFunction) -> Pentadiagonal {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    let res = residuals(u);
    let mut m = Pentadiagonal::zeros(n - 1);
    for (i, row) in res.rows.iter().enumerate() {
        let w = 2.0 * grid.weight(i) / h;
        let interior: Vec<(usize, f64)> = row
            .iter()
            .filter(|(j, c)| *j >= 1 && *j < n && *c != 0.0)
            .map(|&(j, c)| (j - 1, c))
            .collect();
        for &(a, ca) in &interior {
            for &(b, cb) in &interior {
                if a <= b {
                    m.add(a, b, w * ca * cb);
                }
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> UniformGrid {
        UniformGrid::new(n).unwrap()
    }

    fn parabola(n: usize) -> GridFunction {
        GridFunction::from_fn(grid(n), |x| x * (1.0 - x)).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(UniformGrid::new(3).is_err());
        let g = grid(10);
        assert_eq!(g.nodes(), 11);
        assert_eq!(g.x(10), 1.0);
        assert_eq!(g.offset_from_mid(3), -g.offset_from_mid(7));
        assert_eq!(g.folded_index(5), 0);
        assert_eq!(g.folded_index(0), 10);
        assert!(GridFunction::new(g, vec![0.0; 10]).is_err());
        assert!(GridFunction::new(g, vec![f64::NAN; 11]).is_err());
    }

    #[test]
    fn first_diff_examples() {
        assert!(first_diff(&GridFunction::zeros(grid(8))).max_abs() == 0.0);
        let u = parabola(1000);
        let d = first_diff(&u);
        assert!(d.values()[500].abs() < 1e-12);
        assert!((d.values()[250] - 0.5).abs() < 1e-10);
        // one-sided ends are exact for quadratics
        assert!((d.values()[0] - 1.0).abs() < 1e-9);
        assert!((d.values()[1000] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_diff_examples() {
        assert!(second_diff(&GridFunction::zeros(grid(8))).iter().all(|&v| v == 0.0));
        assert!(second_diff(&parabola(200)).iter().all(|&v| (v + 2.0).abs() < 1e-7));
        let s = GridFunction::from_fn(grid(1000), |x| (PI * x).sin()).unwrap();
        assert!((second_diff(&s)[499] + PI * PI).abs() < 1e-4);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&GridFunction::zeros(grid(16))).unwrap(), 0.0);
        // 4∫₀¹(1+t²)^{-5/2}dt = 20/(3·2^{3/2})
        let exact = 20.0 / (3.0 * 2f64.powf(1.5));
        assert!((energy(&parabola(2000)).unwrap() - exact).abs() < 1e-3);
        let bad = GridFunction::from_parts_unchecked(grid(4), vec![0.0, f64::NAN, 0.0, 0.0, 0.0]);
        assert!(energy(&bad).is_err());
    }

    #[test]
    fn a_u_identity_and_value() {
        let u = parabola(400);
        let a = a_u(&u);
        assert!((a.values()[200] + 2.0).abs() < 1e-8);
        let g = u.grid();
        let sum: f64 = a.values().iter().enumerate().map(|(i, v)| g.weight(i) * v * v).sum();
        assert!((energy(&u).unwrap() - sum).abs() < 1e-14);
        assert!(a_u(&GridFunction::zeros(grid(8))).max_abs() == 0.0);
    }

    #[test]
    fn gradient_of_zero_and_symmetry() {
        let z = energy_gradient(&GridFunction::zeros(grid(12))).unwrap();
        assert!(z.max_abs() == 0.0);
        let g = energy_gradient(&parabola(64)).unwrap();
        let v = g.values();
        for i in 0..=64 {
            assert!((v[i] - v[64 - i]).abs() <= 1e-9 * (1.0 + v[i].abs()), "node {i}");
        }
    }

    #[test]
    fn first_variation_matches_gradient_pairing() {
        let u = parabola(1000);
        let phi = GridFunction::from_fn(grid(1000), |x| (PI * x).sin()).unwrap();
        assert_eq!(first_variation(&u, &GridFunction::zeros(grid(1000))).unwrap(), 0.0);
        assert_eq!(first_variation(&GridFunction::zeros(grid(1000)), &phi).unwrap(), 0.0);
        let fv = first_variation(&u, &phi).unwrap();
        let pairing = l2_inner(&energy_gradient(&u).unwrap(), &phi).unwrap();
        assert!((fv - pairing).abs() < 1e-9 * fv.abs().max(1.0));
        // central finite difference of the energy
        let eps = 1e-6;
        let plus = GridFunction::new(u.grid(), u.values().iter().zip(phi.values()).map(|(a, b)| a + eps * b).collect()).unwrap();
        let minus = GridFunction::new(u.grid(), u.values().iter().zip(phi.values()).map(|(a, b)| a - eps * b).collect()).unwrap();
        let fd = (energy(&plus).unwrap() - energy(&minus).unwrap()) / (2.0 * eps);
        assert!((fv - fd).abs() < 1e-5);
    }

    #[test]
    fn l2_examples() {
        let g = grid(1000);
        assert_eq!(l2_norm(&GridFunction::zeros(g)), 0.0);
        assert!((l2_norm(&GridFunction::constant(g, 1.0)) - 1.0).abs() < 1e-14);
        let s = GridFunction::from_fn(g, |x| (PI * x).sin()).unwrap();
        assert!((l2_norm(&s) - 0.5f64.sqrt()).abs() < 1e-6);
        assert!(l2_inner(&s, &GridFunction::zeros(grid(10))).is_err());
    }

    #[test]
    fn obstacle_assumption_flag() {
        let g = grid(20);
        let cone = Obstacle::cone(g, 0.05).unwrap();
        assert!(cone.assumption1_ok);
        assert!(cone.is_symmetric());
        assert!((cone.values()[10] - 0.05).abs() < 1e-15);
        assert!((cone.values()[0] + 0.05).abs() < 1e-15);
        assert!(!Obstacle::constant(g, -1.0).assumption1_ok);
        assert!(!Obstacle::constant(g, 0.0).assumption1_ok);
        assert!(Obstacle::cone(g, -0.1).is_err());
    }

    #[test]
    fn pentadiagonal_solve_roundtrip() {
        let m = 9;
        let mut a = Pentadiagonal::zeros(m);
        for k in 0..m {
            a.diag[k] = 6.0 + k as f64 * 0.1;
        }
        for k in 0..m - 1 {
            a.off1[k] = -4.0 + 0.05 * k as f64;
        }
        for k in 0..m - 2 {
            a.off2[k] = 1.0;
        }
        for k in 0..m {
            a.diag[k] += 2.0;
        }
        let x: Vec<f64> = (0..m).map(|k| (k as f64).sin()).collect();
        let b = a.mul(&x);
        let y = a.solve_spd(&b).unwrap();
        for k in 0..m {
            assert!((x[k] - y[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn gauss_newton_matches_quadratic_hessian_at_zero() {
        // near u = 0 the energy is quadratic with Hessian equal to its
        // Gauss–Newton part, so ∇E_h(φ) ≈ M φ for small φ
        let g = grid(12);
        let m = gauss_newton_hessian(&GridFunction::zeros(g));
        let phi = GridFunction::from_fn(g, |x| 1e-6 * ((PI * x).sin() + 0.3 * (3.0 * PI * x).sin())).unwrap();
        let mphi = m.mul(&phi.values()[1..12]);
        let grad = energy_gradient(&phi).unwrap();
        let scale = grad.max_abs();
        for k in 0..11 {
            assert!((mphi[k] - grad.values()[k + 1]).abs() < 1e-6 * scale, "node {}: {} vs {}", k + 1, mphi[k], grad.values()[k + 1]);
        }
    }
}
