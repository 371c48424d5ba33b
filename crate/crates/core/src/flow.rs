//! Minimizing movements for the obstacle-constrained elastic flow.
//!
//! Each step minimizes `Φ(u) = E_h(u) + ‖u − f‖²/(2τ)` over the nodewise box
//! `u ≥ ψ` with zero ends, starting from the previous iterate `f`. The
//! returned point is certified as a KKT point of the box problem with
//! `Φ(u) ≤ Φ(f)`; `E_h` is nonconvex, so global optimality is not claimed.

use serde::{Deserialize, Serialize};

use crate::discretization::{
    check_same_grid, energy, energy_gradient, gauss_newton_hessian, l2_distance, GridFunction, Obstacle,
    UniformGrid,
};
use crate::error::{Error, Result};
use crate::specialfn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Active-set projected Newton on the Gauss–Newton model of `Φ`.
    #[default]
    ProjectedNewton,
    /// Projected gradient with Barzilai–Borwein steps and Armijo backtracking.
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub tau: f64,
    pub t_end: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Gap below which a node counts as touching; defaults to `10·inner_tol·√h`.
    pub coincidence_tol: Option<f64>,
    pub solver: InnerSolver,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            t_end: 1.0,
            inner_tol: 1e-8,
            inner_max_iter: 200,
            armijo_c: 1e-4,
            backtrack: 0.5,
            coincidence_tol: None,
            solver: InnerSolver::ProjectedNewton,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parameter(msg.to_string()));
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad("tau must be positive");
        }
        if !(self.t_end >= self.tau) {
            return bad("t_end must be at least tau");
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol must be positive");
        }
        if self.inner_max_iter == 0 {
            return bad("inner_max_iter must be at least 1");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if let Some(tol) = self.coincidence_tol {
            if !(tol >= 0.0) {
                return bad("coincidence_tol must be nonnegative");
            }
        }
        Ok(())
    }

    pub fn coincidence_tol_for(&self, grid: UniformGrid) -> f64 {
        self.coincidence_tol
            .unwrap_or(10.0 * self.inner_tol * grid.h().sqrt())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.tau - 1e-9).ceil().max(1.0) as usize
    }
}

/// Discrete variational-inequality certificate of one step.
///
/// With `g = (u − f)/τ + ∇E_h(u)`: on inactive nodes `|g| ≤ tolerance`, on
/// active nodes `g ≥ −tolerance` (the nonnegative multiplier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KKTReport {
    pub stationarity_residual: f64,
    pub multiplier_min: f64,
    pub active_set: Vec<usize>,
    pub scale: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub phi_initial: f64,
    pub phi_final: f64,
    pub global_optimality_certified: bool,
}

impl KKTReport {
    pub fn is_valid(&self) -> bool {
        self.stationarity_residual <= self.tolerance && self.multiplier_min >= -self.tolerance
    }

    pub fn scaled_stationarity(&self) -> f64 {
        self.stationarity_residual / self.scale
    }

    pub fn scaled_multiplier_min(&self) -> f64 {
        if self.multiplier_min.is_finite() {
            self.multiplier_min / self.scale
        } else {
            0.0
        }
    }
}

struct StepProblem<'a> {
    f: &'a GridFunction,
    psi: &'a [f64],
    tau: f64,
}

impl StepProblem<'_> {
    fn phi(&self, u: &GridFunction) -> Result<f64> {
        let d = l2_distance(u, self.f)?;
        Ok(energy(u)? + d * d / (2.0 * self.tau))
    }

    fn gradient(&self, u: &GridFunction) -> Result<Vec<f64>> {
        let mut g = energy_gradient(u)?.into_values();
        let n = g.len() - 1;
        for i in 1..n {
            g[i] += (u.values()[i] - self.f.values()[i]) / self.tau;
        }
        Ok(g)
    }

    fn project(&self, values: &mut [f64]) {
        let n = values.len() - 1;
        values[0] = 0.0;
        values[n] = 0.0;
        for i in 1..n {
            if values[i] < self.psi[i] {
                values[i] = self.psi[i];
            }
        }
    }
}

/// KKT residuals of `u` for the step from `f`, given the L²-gradient `g` of `Φ`.
fn kkt_from_gradient(u: &GridFunction, psi: &[f64], g: &[f64], coincidence_tol: f64) -> (f64, f64, Vec<usize>) {
    let v = u.values();
    let n = v.len() - 1;
    let mut stationarity: f64 = 0.0;
    let mut multiplier = f64::INFINITY;
    let mut active = Vec::new();
    for i in 1..n {
        if v[i] - psi[i] <= coincidence_tol {
            active.push(i);
            multiplier = multiplier.min(g[i]);
        } else {
            stationarity = stationarity.max(g[i].abs());
        }
    }
    (stationarity, multiplier, active)
}

/// Evaluates the step certificate for an arbitrary candidate `u`.
pub fn kkt_report(
    u: &GridFunction,
    f: &GridFunction,
    obstacle: &Obstacle,
    cfg: &FlowConfig,
) -> Result<KKTReport> {
    check_same_grid(u, f)?;
    let problem = StepProblem {
        f,
        psi: obstacle.values(),
        tau: cfg.tau,
    };
    let scale = step_scale(f)?;
    let g = problem.gradient(u)?;
    let (stationarity, multiplier, active) =
        kkt_from_gradient(u, obstacle.values(), &g, cfg.coincidence_tol_for(u.grid()));
    Ok(KKTReport {
        stationarity_residual: stationarity,
        multiplier_min: multiplier,
        active_set: active,
        scale,
        tolerance: cfg.inner_tol * scale,
        iterations: 0,
        phi_initial: problem.phi(f)?,
        phi_final: problem.phi(u)?,
        global_optimality_certified: false,
    })
}

/// Magnitude of the terms entering the KKT residual: `1 + ‖∇E_h(f)‖_∞`.
fn step_scale(f: &GridFunction) -> Result<f64> {
    Ok(1.0 + energy_gradient(f)?.max_abs())
}

fn check_step_input(f: &GridFunction, obstacle: &Obstacle) -> Result<()> {
    check_same_grid(f, &obstacle.samples)?;
    if !f.has_dirichlet_ends() {
        return Err(Error::Precondition("iterate must vanish at both ends".into()));
    }
    if let Some(i) = f
        .values()
        .iter()
        .zip(obstacle.values())
        .position(|(u, p)| u < p)
    {
        return Err(Error::Precondition(format!(
            "iterate lies below the obstacle at node {i} ({} < {})",
            f.values()[i],
            obstacle.values()[i]
        )));
    }
    Ok(())
}

/// One minimizing-movements step from `f`.
pub fn mm_step(f: &GridFunction, obstacle: &Obstacle, cfg: &FlowConfig) -> Result<(GridFunction, KKTReport)> {
    cfg.validate()?;
    check_step_input(f, obstacle)?;
    let problem = StepProblem {
        f,
        psi: obstacle.values(),
        tau: cfg.tau,
    };
    let scale = step_scale(f)?;
    let tolerance = cfg.inner_tol * scale;
    let ctol = cfg.coincidence_tol_for(f.grid());
    let phi_initial = problem.phi(f)?;
    let outcome = match cfg.solver {
        InnerSolver::ProjectedNewton => projected_newton(&problem, cfg, tolerance, ctol)?,
        InnerSolver::ProjectedGradient => projected_gradient(&problem, cfg, tolerance, ctol)?,
    };
    let (stationarity, multiplier, active) = kkt_from_gradient(&outcome.u, problem.psi, &outcome.g, ctol);
    let report = KKTReport {
        stationarity_residual: stationarity,
        multiplier_min: multiplier,
        active_set: active,
        scale,
        tolerance,
        iterations: outcome.iterations,
        phi_initial,
        phi_final: outcome.phi,
        global_optimality_certified: false,
    };
    if !report.is_valid() {
        return Err(Error::NonConvergence {
            iterations: outcome.iterations,
            residual: stationarity.max(-multiplier),
            tolerance,
            partial: Box::new(outcome.u),
        });
    }
    Ok((outcome.u, report))
}

struct InnerOutcome {
    u: GridFunction,
    g: Vec<f64>,
    phi: f64,
    iterations: usize,
}

fn converged(u: &GridFunction, psi: &[f64], g: &[f64], tolerance: f64, ctol: f64) -> bool {
    let (s, m, _) = kkt_from_gradient(u, psi, g, ctol);
    s <= tolerance && m >= -tolerance
}

// Φ differences below this are indistinguishable from rounding.
fn phi_noise(phi: f64) -> f64 {
    64.0 * f64::EPSILON * phi.abs().max(1e-300)
}

fn projected_newton(problem: &StepProblem<'_>, cfg: &FlowConfig, tolerance: f64, ctol: f64) -> Result<InnerOutcome> {
    let grid = problem.f.grid();
    let n = grid.n();
    let h = grid.h();
    let psi = problem.psi;
    let mut u = problem.f.clone();
    let mut phi = problem.phi(&u)?;
    let mut g = problem.gradient(&u)?;
    let mut iterations = 0;
    while iterations < cfg.inner_max_iter {
        if converged(&u, psi, &g, tolerance, ctol) {
            break;
        }
        iterations += 1;
        let mut m = gauss_newton_hessian(&u);
        for d in m.diag.iter_mut() {
            *d += 1.0 / problem.tau;
        }
        let v = u.values();
        // ε-binding set: near the obstacle and pushed into it
        let eps = (1..n)
            .map(|i| (v[i] - (v[i] - g[i] / m.diag[i - 1]).max(psi[i])).abs())
            .fold(0.0, f64::max)
            .min(1e-3 * (1.0 + u.max_abs()));
        let binding: Vec<bool> = (0..=n)
            .map(|i| i >= 1 && i < n && v[i] - psi[i] <= eps && g[i] > 0.0)
            .collect();
        for k in 0..n - 1 {
            if binding[k + 1] {
                if k >= 1 {
                    m.off1[k - 1] = 0.0;
                }
                if k + 1 < n - 1 {
                    m.off1[k] = 0.0;
                }
                if k >= 2 {
                    m.off2[k - 2] = 0.0;
                }
                if k + 2 < n - 1 {
                    m.off2[k] = 0.0;
                }
            }
        }
        let rhs: Vec<f64> = (1..n).map(|i| -g[i]).collect();
        let direction = match m.solve_spd(&rhs) {
            Some(d) => d,
            None => break,
        };
        let mut accepted = false;
        let mut alpha = 1.0;
        while alpha > 1e-12 {
            let mut trial = v.to_vec();
            for i in 1..n {
                trial[i] = v[i] + alpha * direction[i - 1];
            }
            problem.project(&mut trial);
            let mut predicted = 0.0;
            for i in 1..n {
                predicted += if binding[i] {
                    g[i] * (v[i] - trial[i])
                } else {
                    -alpha * g[i] * direction[i - 1]
                };
            }
            predicted *= h;
            let candidate = GridFunction::from_parts_unchecked(grid, trial);
            let phi_trial = problem.phi(&candidate)?;
            let sufficient = phi_trial <= phi - cfg.armijo_c * predicted;
            let at_noise_floor = predicted <= phi_noise(phi) && phi_trial <= phi + phi_noise(phi);
            if sufficient || at_noise_floor {
                let changed = candidate.values() != u.values();
                u = candidate;
                phi = phi_trial;
                g = problem.gradient(&u)?;
                accepted = changed || sufficient;
                break;
            }
            alpha *= cfg.backtrack;
        }
        if !accepted {
            // Newton model exhausted; one gradient-projection step keeps Φ decreasing
            match gradient_projection_step(problem, &u, &g, phi, cfg, 1.0 / m.diag.iter().fold(0.0, |a: f64, &b| a.max(b)))? {
                Some((next, phi_next)) => {
                    u = next;
                    phi = phi_next;
                    g = problem.gradient(&u)?;
                }
                None => break,
            }
        }
    }
    Ok(InnerOutcome {
        u,
        g,
        phi,
        iterations,
    })
}

/// One Armijo-backtracked step along the projection arc `Π(u − αg)`.
fn gradient_projection_step(
    problem: &StepProblem<'_>,
    u: &GridFunction,
    g: &[f64],
    phi: f64,
    cfg: &FlowConfig,
    alpha0: f64,
) -> Result<Option<(GridFunction, f64)>> {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    let v = u.values();
    let mut alpha = alpha0.clamp(1e-8 * grid.h().powi(4), 1e4);
    for _ in 0..80 {
        let mut trial: Vec<f64> = v.iter().zip(g).map(|(a, b)| a - alpha * b).collect();
        problem.project(&mut trial);
        let directional: f64 = (1..n).map(|i| g[i] * (trial[i] - v[i])).sum::<f64>() * h;
        if directional == 0.0 {
            return Ok(None);
        }
        let candidate = GridFunction::from_parts_unchecked(grid, trial);
        let phi_trial = problem.phi(&candidate)?;
        let at_noise_floor = -directional <= phi_noise(phi) && phi_trial <= phi + phi_noise(phi);
        if phi_trial <= phi + cfg.armijo_c * directional || at_noise_floor {
            return Ok(Some((candidate, phi_trial)));
        }
        alpha *= cfg.backtrack;
    }
    Ok(None)
}

fn projected_gradient(problem: &StepProblem<'_>, cfg: &FlowConfig, tolerance: f64, ctol: f64) -> Result<InnerOutcome> {
    let psi = problem.psi;
    let n = problem.f.grid().n();
    let mut u = problem.f.clone();
    let mut phi = problem.phi(&u)?;
    let mut g = problem.gradient(&u)?;
    let mut alpha = problem.tau.clamp(1e-8, 1e4);
    let mut iterations = 0;
    while iterations < cfg.inner_max_iter {
        if converged(&u, psi, &g, tolerance, ctol) {
            break;
        }
        iterations += 1;
        let Some((next, phi_next)) = gradient_projection_step(problem, &u, &g, phi, cfg, alpha)? else {
            break;
        };
        let g_next = problem.gradient(&next)?;
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 1..n {
            let s = next.values()[i] - u.values()[i];
            let y = g_next[i] - g[i];
            ss += s * s;
            sy += s * y;
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-8, 1e4) } else { 1e4 };
        u = next;
        phi = phi_next;
        g = g_next;
    }
    Ok(InnerOutcome {
        u,
        g,
        phi,
        iterations,
    })
}

/// When to stop advancing a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run until `t_end`.
    Horizon,
    /// Stop once the energy decrease per unit time drops below `rate`
    /// (or at `t_end`, whichever comes first).
    Stall { rate: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: UniformGrid,
    pub obstacle: Obstacle,
    pub tau: f64,
    pub inner_tol: f64,
    pub coincidence_tol: f64,
    pub t0: f64,
    pub times: Vec<f64>,
    pub iterates: Vec<GridFunction>,
    pub energies: Vec<f64>,
    /// `‖u_{k+1} − u_k‖_{L²}`, one entry per step.
    pub step_norms: Vec<f64>,
    pub coincidence_counts: Vec<usize>,
    pub symmetry_residuals: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub kkt: Vec<KKTReport>,
    pub warnings: Vec<String>,
    pub stalled: bool,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.step_norms.len()
    }

    pub fn initial(&self) -> &GridFunction {
        &self.iterates[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.iterates.last().expect("trajectory holds u0")
    }

    pub fn t_last(&self) -> f64 {
        *self.times.last().expect("trajectory holds t0")
    }

    /// First step index whose iterate touches the obstacle.
    pub fn first_touch(&self) -> Option<usize> {
        self.coincidence_counts.iter().position(|&c| c > 0)
    }

    pub fn max_symmetry_residual(&self) -> f64 {
        self.symmetry_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Energy decrease per unit time of step `k`, robust to rounding in `E_h`.
    pub fn dissipation_rate(&self, k: usize) -> f64 {
        let de = self.energies[k] - self.energies[k + 1];
        let kinetic = self.step_norms[k].powi(2) / (2.0 * self.tau);
        de.max(kinetic) / self.tau
    }
}

fn flow_warnings(u0: &GridFunction, obstacle: &Obstacle, cfg: &FlowConfig, e0: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    if e0 >= specialfn::existence_threshold() {
        warnings.push(format!(
            "initial energy {e0:.6} is not below c0^2/4 = {:.6}; existence theory does not cover this run",
            specialfn::existence_threshold()
        ));
    }
    if e0 > specialfn::minimality_threshold() {
        warnings.push(format!(
            "initial energy {e0:.6} exceeds G(2)^2 = {:.6}: outside proven regime",
            specialfn::minimality_threshold()
        ));
    }
    let h = u0.grid().h();
    if cfg.tau > 10.0 * h * h {
        warnings.push(format!(
            "tau = {} exceeds 10 h^2 = {:.3e}; per-step variational-inequality residuals are coarse",
            cfg.tau,
            10.0 * h * h
        ));
    }
    if !obstacle.assumption1_ok {
        warnings.push("obstacle violates Assumption 1 (psi(0), psi(1) < 0 < max psi)".into());
    }
    warnings
}

/// Runs the scheme from `u0` until `cfg.t_end`.
pub fn run_flow(u0: &GridFunction, obstacle: &Obstacle, cfg: &FlowConfig) -> Result<Trajectory> {
    run_flow_from(u0, obstacle, cfg, 0.0, StopRule::Horizon)
}

/// Runs the scheme from `u0` given at time `t0` (resuming a checkpoint)
/// for a further `cfg.t_end`.
pub fn run_flow_from(
    u0: &GridFunction,
    obstacle: &Obstacle,
    cfg: &FlowConfig,
    t0: f64,
    stop: StopRule,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_step_input(u0, obstacle)?;
    let grid = u0.grid();
    let e0 = energy(u0)?;
    let ctol = cfg.coincidence_tol_for(grid);
    let mut traj = Trajectory {
        grid,
        obstacle: obstacle.clone(),
        tau: cfg.tau,
        inner_tol: cfg.inner_tol,
        coincidence_tol: ctol,
        t0,
        times: vec![t0],
        iterates: vec![u0.clone()],
        energies: vec![e0],
        step_norms: Vec::new(),
        coincidence_counts: vec![coincidence_set(u0, obstacle, ctol).len()],
        symmetry_residuals: vec![symmetry_residual(u0)],
        inner_iterations: Vec::new(),
        kkt: Vec::new(),
        warnings: flow_warnings(u0, obstacle, cfg, e0),
        stalled: false,
    };
    let horizon = t0 + cfg.t_end;
    let mut k = 0usize;
    loop {
        let t_next = t0 + (k + 1) as f64 * cfg.tau;
        if t_next > horizon + 1e-9 * cfg.tau {
            break;
        }
        let current = traj.last();
        let (next, report) = mm_step(current, obstacle, cfg).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })?;
        let step = l2_distance(&next, current)?;
        traj.times.push(t_next);
        traj.energies.push(energy(&next)?);
        traj.step_norms.push(step);
        traj.coincidence_counts.push(coincidence_set(&next, obstacle, ctol).len());
        traj.symmetry_residuals.push(symmetry_residual(&next));
        traj.inner_iterations.push(report.iterations);
        traj.kkt.push(report);
        traj.iterates.push(next);
        if let StopRule::Stall { rate } = stop {
            if traj.dissipation_rate(k) < rate {
                traj.stalled = true;
                break;
            }
        }
        k += 1;
    }
    Ok(traj)
}

fn check_time(traj: &Trajectory, t: f64) -> Result<f64> {
    let t_last = traj.t_last();
    let slack = 1e-9 * traj.tau;
    if !(t >= traj.t0 - slack && t <= t_last + slack) {
        return Err(Error::OutOfRange {
            value: t,
            detail: format!("trajectory covers [{}, {}]", traj.t0, t_last),
        });
    }
    Ok(((t - traj.t0) / traj.tau).clamp(0.0, traj.steps() as f64))
}

/// Piecewise-constant interpolation: `u_{k+1}` on `(kτ, (k+1)τ]`, `u0` at `t0`.
pub fn interpolate_constant(traj: &Trajectory, t: f64) -> Result<GridFunction> {
    let s = check_time(traj, t)?;
    let nearest = s.round();
    let index = if (s - nearest).abs() <= 1e-9 {
        nearest as usize
    } else {
        s.ceil() as usize
    };
    Ok(traj.iterates[index].clone())
}

/// Piecewise-linear interpolation between consecutive iterates.
pub fn interpolate_linear(traj: &Trajectory, t: f64) -> Result<GridFunction> {
    let s = check_time(traj, t)?;
    let nearest = s.round();
    if (s - nearest).abs() <= 1e-9 {
        return Ok(traj.iterates[nearest as usize].clone());
    }
    let k = s.floor() as usize;
    traj.iterates[k].lerp(&traj.iterates[k + 1], s - k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub steps: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// `Σ ‖Δu‖² / (2τ)`.
    pub dissipated: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `∫ ‖u̇^τ‖² dt = Σ ‖Δu‖² / τ`.
    pub kinetic_integral: f64,
    pub kinetic_bound: f64,
    pub holds: bool,
    pub kinetic_holds: bool,
}

/// Checks `E(u_K) + Σ‖Δu‖²/(2τ) ≤ E(u0) + slack` and `∫‖u̇‖² ≤ 2E(u0)`.
pub fn dissipation_report(traj: &Trajectory) -> DissipationReport {
    let e0 = traj.energies[0];
    let ek = *traj.energies.last().expect("nonempty");
    let sum_sq: f64 = traj.step_norms.iter().map(|s| s * s).sum();
    let dissipated = sum_sq / (2.0 * traj.tau);
    let slack: f64 = traj
        .step_norms
        .iter()
        .zip(&traj.energies)
        .map(|(s, e)| traj.inner_tol * s + energy_noise(*e))
        .sum();
    let lhs = ek + dissipated;
    let rhs = e0 + slack;
    let kinetic_integral = sum_sq / traj.tau;
    DissipationReport {
        steps: traj.steps(),
        initial_energy: e0,
        final_energy: ek,
        dissipated,
        lhs,
        rhs,
        slack,
        kinetic_integral,
        kinetic_bound: 2.0 * e0,
        holds: lhs <= rhs,
        kinetic_holds: kinetic_integral <= 2.0 * e0 + 2.0 * slack,
    }
}

fn energy_noise(e: f64) -> f64 {
    64.0 * f64::EPSILON * (1.0 + e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInequalityReport {
    /// Steps with `E_{k+1} > E_k` beyond rounding.
    pub energy_increases: usize,
    /// `max_k (E_{k+1} + ‖Δu‖²/(2τ) − E_k − slack_k)`; nonpositive when all steps pass.
    pub worst_excess: f64,
    pub violations: usize,
    pub holds: bool,
}

/// Checks `E(u_{k+1}) + ‖u_{k+1} − u_k‖²/(2τ) ≤ E(u_k)` at every step, up to
/// `slack_k = inner_tol·‖Δu‖ + 64 eps (1 + E_k)`.
pub fn step_inequality_report(traj: &Trajectory) -> StepInequalityReport {
    let mut energy_increases = 0;
    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for k in 0..traj.steps() {
        let (e, next, d) = (traj.energies[k], traj.energies[k + 1], traj.step_norms[k]);
        if next > e + energy_noise(e) {
            energy_increases += 1;
        }
        let excess = next + d * d / (2.0 * traj.tau) - e - (traj.inner_tol * d + energy_noise(e));
        if excess > 0.0 {
            violations += 1;
        }
        worst_excess = worst_excess.max(excess);
    }
    StepInequalityReport {
        energy_increases,
        worst_excess,
        violations,
        holds: energy_increases == 0 && violations == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// `D = √(Σ ‖Δu‖²/τ)`.
    pub constant: f64,
    pub checked: usize,
    pub violations: usize,
    /// Largest `‖u(t) − u(s)‖ / (D √|t − s|)` over the pairs.
    pub max_ratio: f64,
}

/// `‖u^τ(t) − u^τ(s)‖_{L²} ≤ D √|t − s|` for the given time pairs.
pub fn holder_check(traj: &Trajectory, pairs: &[(f64, f64)]) -> Result<HolderReport> {
    let sum_sq: f64 = traj.step_norms.iter().map(|s| s * s).sum();
    let constant = (sum_sq / traj.tau).sqrt();
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &(s, t) in pairs {
        let a = interpolate_linear(traj, s)?;
        let b = interpolate_linear(traj, t)?;
        let lhs = l2_distance(&a, &b)?;
        let rhs = constant * (t - s).abs().sqrt();
        if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(HolderReport {
        constant,
        checked: pairs.len(),
        violations,
        max_ratio,
    })
}

/// Interior nodes where `u_i − ψ_i ≤ tol`.
pub fn coincidence_set(u: &GridFunction, obstacle: &Obstacle, tol: f64) -> Vec<usize> {
    let (v, psi) = (u.values(), obstacle.values());
    (1..v.len() - 1).filter(|&i| v[i] - psi[i] <= tol).collect()
}

/// Length `L₀` such that every time window longer than `L₀` contains a
/// touching time, for initial energy `e0` and infimum estimate `inf_energy`:
///
/// `L₀ = G⁻¹(√E₀)² / (2 inf E) · 1 / (5/(1 + G⁻¹(√E₀)²) − 3)`.
pub fn touch_window(e0: f64, inf_energy: f64) -> Result<f64> {
    if !(inf_energy > 0.0) {
        return Err(Error::Precondition(format!(
            "the energy infimum estimate must be positive, got {inf_energy}"
        )));
    }
    if !(e0 >= 0.0) || e0 >= specialfn::touching_threshold() {
        return Err(Error::Precondition(format!(
            "initial energy {e0} must lie below G(sqrt(2/3))^2 = {:.12}",
            specialfn::touching_threshold()
        )));
    }
    let s = specialfn::g_inv(e0.sqrt())?;
    let denominator = 5.0 / (1.0 + s * s) - 3.0;
    if !(denominator > 0.0) {
        return Err(Error::Precondition("touching window denominator is not positive".into()));
    }
    Ok(s * s / (2.0 * inf_energy) / denominator)
}

/// The formula adopted for `L₀`, printed by the CLI next to the value.
pub const TOUCH_WINDOW_FORMULA: &str = "L0 = Ginv(sqrt(E0))^2 / (2 infE) * 1 / (5/(1 + Ginv(sqrt(E0))^2) - 3)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchScan {
    pub window: f64,
    pub first_touch_time: Option<f64>,
    /// Longest touch-free stretch, including the lead-in from `t0` and the tail.
    pub longest_gap: f64,
    /// Whether the run is long enough for at least one full window.
    pub conclusive: bool,
    pub satisfied: bool,
}

/// Checks that every window of length `window` inside the run contains a
/// step whose coincidence set is nonempty.
pub fn touch_scan(traj: &Trajectory, window: f64) -> TouchScan {
    let touching: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.coincidence_counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&t, _)| t)
        .collect();
    let span = traj.t_last() - traj.t0;
    let longest_gap = match (touching.first(), touching.last()) {
        (Some(&first), Some(&last)) => {
            let inner = touching.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            (first - traj.t0).max(inner).max(traj.t_last() - last)
        }
        _ => span,
    };
    TouchScan {
        window,
        first_touch_time: touching.first().copied(),
        longest_gap,
        conclusive: span >= window || !touching.is_empty(),
        satisfied: longest_gap <= window,
    }
}

/// `(|u''(0⁺)|, |u''(1⁻)|)` from one-sided second-order differences.
pub fn navier_diagnostic(u: &GridFunction) -> (f64, f64) {
    let (left, right) = crate::discretization::endpoint_curvature(u);
    (left.abs(), right.abs())
}

/// `max_i |u_i − u_{n−i}|`.
pub fn symmetry_residual(u: &GridFunction) -> f64 {
    let v = u.values();
    let n = v.len() - 1;
    (0..=n / 2).map(|i| (v[i] - v[n - i]).abs()).fold(0.0, f64::max)
}
