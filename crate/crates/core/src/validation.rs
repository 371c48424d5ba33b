//! The acceptance suite: one check per criterion, tolerances pinned here.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::critical::{check_critical, check_critical_with, critical_profile, CriticalPoint};
use crate::discretization::{energy, energy_gradient, l2_inner, GridFunction, Obstacle, UniformGrid};
use crate::error::Result;
use crate::flow::{
    dissipation_report, mm_step, navier_diagnostic, run_flow, run_flow_from, step_inequality_report, touch_scan,
    touch_window, FlowConfig,
    StopRule, Trajectory,
};
use crate::rearrange::{
    decreasing_rearrangement, one_over_ginv_second_derivative, random_concave, step_norm, symmetric_step_norm,
    talenti_inequality_check, talenti_source,
};
use crate::specialfn::{self, hyp2f1, HypergeometricParams};

/// Name of the seeded generator used for random test data.
pub const RNG_NAME: &str = "ChaCha8Rng";
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Exact energy of `x(1 − x)`: `20 / (3 · 2^{3/2})`.
pub const PARABOLA_ENERGY: f64 = 2.357_022_603_955_158_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: String,
    pub status: Status,
    /// Headline measured quantity.
    pub measured: f64,
    /// Bound it is compared against.
    pub bound: f64,
    pub tolerance: f64,
    pub runtime_s: f64,
    pub runtime_limit_s: f64,
    pub details: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} measured={:.6e} bound={:.6e} runtime={:.3}s/{}s",
            match self.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            },
            self.id,
            self.name,
            self.measured,
            self.bound,
            self.runtime_s,
            self.runtime_limit_s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub quick: bool,
    pub seed: u64,
    pub rng: String,
}

impl ValidationReport {
    pub fn from_checks(checks: Vec<CheckResult>, quick: bool, seed: u64) -> Self {
        let pass = checks.iter().all(CheckResult::passed);
        Self {
            checks,
            pass,
            quick,
            seed,
            rng: RNG_NAME.into(),
        }
    }
}

struct Builder {
    id: u8,
    name: &'static str,
    limit: f64,
    start: Instant,
    ok: bool,
    details: Vec<String>,
}

impl Builder {
    fn new(id: u8, name: &'static str, limit: f64) -> Self {
        Self {
            id,
            name,
            limit,
            start: Instant::now(),
            ok: true,
            details: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, detail: String) {
        self.ok &= ok;
        self.details.push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, detail: String) {
        self.details.push(format!("info {detail}"));
    }

    fn finish(mut self, measured: f64, bound: f64, tolerance: f64) -> CheckResult {
        let runtime = self.start.elapsed().as_secs_f64();
        let in_time = runtime <= self.limit;
        self.require(in_time, format!("runtime {runtime:.3}s <= {}s", self.limit));
        CheckResult {
            id: self.id,
            name: self.name.into(),
            status: if self.ok { Status::Pass } else { Status::Fail },
            measured,
            bound,
            tolerance,
            runtime_s: runtime,
            runtime_limit_s: self.limit,
            details: self.details,
        }
    }

    fn error(mut self, err: crate::Error) -> CheckResult {
        self.require(false, format!("error: {err}"));
        self.finish(f64::NAN, f64::NAN, f64::NAN)
    }
}

fn guarded(b: Builder, body: impl FnOnce(&mut Builder) -> Result<(f64, f64, f64)>) -> CheckResult {
    let mut b = b;
    match body(&mut b) {
        Ok((measured, bound, tol)) => b.finish(measured, bound, tol),
        Err(e) => b.error(e),
    }
}

pub fn check_constants() -> CheckResult {
    guarded(Builder::new(1, "constants", 1.0), |b| {
        let truncated = specialfn::c0_by_truncated_quadrature(specialfn::C0_TRUNCATION);
        let (limit, _) = specialfn::c0_estimates();
        let diff = (limit - truncated).abs();
        b.require(diff < 1e-10, format!("|c0_limit - c0_truncated| = {diff:.3e} < 1e-10"));
        b.require((limit - 2.39628).abs() < 5e-6, format!("c0 = {limit:.15} ~ 2.39628"));
        let thr = specialfn::existence_threshold();
        b.require((thr - 1.43554).abs() < 5e-6, format!("c0^2/4 = {thr:.15} ~ 1.43554"));
        Ok((diff, 1e-10, 1e-10))
    })
}

pub fn check_energy_oracle() -> CheckResult {
    guarded(Builder::new(2, "energy_oracle", 1.0), |b| {
        let ns = [250usize, 500, 1000, 2000];
        let mut errors = Vec::new();
        for &n in &ns {
            let u = GridFunction::from_fn(UniformGrid::new(n)?, |x| x * (1.0 - x))?;
            let u = with_zero_ends(u)?;
            errors.push((energy(&u)? - PARABOLA_ENERGY).abs());
        }
        let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
        let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
        let last = errors[3];
        b.require(last < 1e-3, format!("error at N=2000: {last:.3e} < 1e-3"));
        b.require(min_order >= 1.8, format!("orders {orders:.4?} >= 1.8"));
        b.note(format!("errors {}", sci_list(&errors)));
        Ok((min_order, 1.8, 1e-3))
    })
}

fn sci_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn with_zero_ends(u: GridFunction) -> Result<GridFunction> {
    let grid = u.grid();
    let mut v = u.into_values();
    v[0] = 0.0;
    v[grid.n()] = 0.0;
    GridFunction::new(grid, v)
}

pub fn check_uc_energy() -> CheckResult {
    guarded(Builder::new(3, "uc_energy", 2.0), |b| {
        let grid = UniformGrid::new(2000)?;
        let mut worst: f64 = 0.0;
        for &c in &[0.25, 0.5, 1.0] {
            let e = energy(&GridFunction::u_c(grid, c)?)?;
            let err = (e - c * c).abs();
            worst = worst.max(err);
            b.require(err < 2e-3, format!("c={c}: E_h = {e:.12}, |E_h - c^2| = {err:.3e} < 2e-3"));
        }
        Ok((worst, 2e-3, 2e-3))
    })
}

/// Random sine series with five modes, normalized to `max |u| = amplitude`.
fn random_smooth<R: Rng>(grid: UniformGrid, rng: &mut R, amplitude: f64) -> Result<GridFunction> {
    let coeffs: Vec<f64> = (1..=5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let values = (0..grid.nodes())
        .map(|i| {
            if i == 0 || i == grid.n() {
                return 0.0;
            }
            let x = grid.x(i);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * x).sin() / (k + 1) as f64)
                .sum::<f64>()
        })
        .collect();
    let u = GridFunction::new(grid, values)?;
    let peak = u.max_abs();
    Ok(if peak > 0.0 { u.scaled(amplitude / peak) } else { u })
}

fn fd_relative_error(u: &GridFunction, phi: &GridFunction) -> Result<f64> {
    let eps = 1e-6;
    let analytic = l2_inner(&energy_gradient(u)?, phi)?;
    let plus = energy(&u.sub(&phi.scaled(-eps))?)?;
    let minus = energy(&u.sub(&phi.scaled(eps))?)?;
    let fd = (plus - minus) / (2.0 * eps);
    Ok((analytic - fd).abs() / analytic.abs().max(1e-12))
}

pub fn check_gradient(seed: u64, pairs: usize) -> CheckResult {
    guarded(Builder::new(4, "gradient_consistency", 5.0), |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut worst_rough: f64 = 0.0;
        for _ in 0..pairs {
            let n = [50usize, 100, 200][rng.gen_range(0..3)];
            let grid = UniformGrid::new(n)?;
            let amplitude = rng.gen_range(0.05..0.5);
            let u = random_smooth(grid, &mut rng, amplitude)?;
            let phi = random_smooth(grid, &mut rng, 1.0)?;
            let rough_values = (0..grid.nodes())
                .map(|i| if i == 0 || i == n { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let rough = GridFunction::new(grid, rough_values)?;
            worst = worst.max(fd_relative_error(&u, &phi)?);
            worst_rough = worst_rough.max(fd_relative_error(&u, &rough)?);
        }
        b.require(worst < 1e-5, format!("worst relative error over {pairs} pairs: {worst:.3e} < 1e-5"));
        b.note(format!("nodal white-noise directions at the same eps: {worst_rough:.3e}"));
        Ok((worst, 1e-5, 1e-5))
    })
}

/// The reference cone run shared by criteria 5 to 7.
pub struct ConeRun {
    pub trajectory: Trajectory,
    pub critical: CriticalPoint,
    pub runtime_s: f64,
}

pub const CONE_HEIGHT: f64 = 0.02;
pub const CONE_N: usize = 200;
pub const CONE_TAU: f64 = 1e-3;
pub const CONE_T: f64 = 2.0;
pub const CONE_UC: f64 = 0.5;
pub const INNER_TOL: f64 = 1e-8;

pub fn cone_run() -> Result<ConeRun> {
    let start = Instant::now();
    let grid = UniformGrid::new(CONE_N)?;
    let psi = Obstacle::cone(grid, CONE_HEIGHT)?;
    let u0 = GridFunction::u_c(grid, CONE_UC)?;
    let cfg = FlowConfig {
        tau: CONE_TAU,
        t_end: CONE_T,
        inner_tol: INNER_TOL,
        ..FlowConfig::default()
    };
    let trajectory = run_flow(&u0, &psi, &cfg)?;
    let critical = critical_profile(CONE_HEIGHT, grid)?;
    Ok(ConeRun {
        trajectory,
        critical,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

fn cone_preamble(b: &mut Builder, run: &ConeRun) {
    let traj = &run.trajectory;
    let e0 = traj.energies[0];
    b.note(format!(
        "h={CONE_HEIGHT}, N={CONE_N}, tau={CONE_TAU}, T={CONE_T}, u0=u_c(c={CONE_UC}), E0={e0:.12}, shared run {:.3}s",
        run.runtime_s
    ));
    b.require(traj.obstacle.admits(traj.initial()), "u0 >= psi and u0 vanishes at the ends".into());
}

pub fn check_flow_inequalities(run: &ConeRun) -> CheckResult {
    let mut b = Builder::new(5, "flow_inequalities", 60.0);
    b.start -= std::time::Duration::from_secs_f64(run.runtime_s);
    guarded(b, |b| {
        cone_preamble(b, run);
        let traj = &run.trajectory;
        let e0 = traj.energies[0];
        b.require(
            e0 < specialfn::minimality_threshold(),
            format!("E0 < G(2)^2 = {:.12}", specialfn::minimality_threshold()),
        );
        let steps = step_inequality_report(traj);
        b.require(steps.energy_increases == 0, format!("energy increases: {}", steps.energy_increases));
        b.require(
            steps.holds,
            format!(
                "per-step E_(k+1) + |du|^2/(2 tau) - E_k - slack, worst {:.3e} <= 0",
                steps.worst_excess
            ),
        );
        let report = dissipation_report(traj);
        b.require(
            report.holds,
            format!("dissipation lhs {:.12} <= rhs {:.12}", report.lhs, report.rhs),
        );
        b.require(
            report.kinetic_holds,
            format!("int |u_t|^2 = {:.6e} <= 2 E0 = {:.6e}", report.kinetic_integral, report.kinetic_bound),
        );
        let invalid = traj.kkt.iter().filter(|k| !k.is_valid()).count();
        let worst_kkt = traj
            .kkt
            .iter()
            .map(|k| (k.stationarity_residual / k.tolerance).max(-k.multiplier_min / k.tolerance))
            .fold(0.0, f64::max);
        b.require(
            invalid == 0,
            format!("KKT residual / (inner_tol*scale) worst {worst_kkt:.3e} <= 1 over {} steps", traj.steps()),
        );
        Ok((worst_kkt, 1.0, INNER_TOL))
    })
}

pub fn check_symmetry(run: &ConeRun) -> CheckResult {
    guarded(Builder::new(6, "symmetry_preservation", 60.0), |b| {
        cone_preamble(b, run);
        let max = run.trajectory.max_symmetry_residual();
        b.require(max <= 1e-10, format!("max_k max_i |u_i - u_(n-i)| = {max:.3e} <= 1e-10"));
        Ok((max, 1e-10, 1e-10))
    })
}

pub fn check_touching(run: &ConeRun) -> CheckResult {
    guarded(Builder::new(7, "finite_time_touching", 60.0), |b| {
        cone_preamble(b, run);
        let traj = &run.trajectory;
        let e0 = traj.energies[0];
        let threshold = specialfn::touching_threshold();
        b.require(e0 < threshold, format!("E0 = {e0:.12} < G(sqrt(2/3))^2 = {threshold:.12}"));
        let inf_e = run.critical.energy;
        let l0 = touch_window(e0, inf_e)?;
        b.note(format!("{} with infE = E_h(critical) = {inf_e:.12}", crate::flow::TOUCH_WINDOW_FORMULA));
        let scan = touch_scan(traj, l0);
        b.note(format!(
            "L0 = {l0:.6}, run length {:.3}, first touch at t = {:?}, longest touch-free stretch {:.6}",
            traj.t_last() - traj.t0,
            scan.first_touch_time,
            scan.longest_gap
        ));
        if traj.t_last() - traj.t0 < l0 {
            b.note("run is shorter than L0; windows are clipped to the run".into());
        }
        b.require(scan.first_touch_time.is_some(), "some step touches the obstacle".into());
        b.require(
            scan.satisfied,
            format!("every window of length L0 (clipped to the run) contains a touching step"),
        );
        Ok((scan.longest_gap, l0, 0.0))
    })
}

pub fn check_hypergeometric() -> CheckResult {
    guarded(Builder::new(8, "hypergeometric", 5.0), |b| {
        // F(a,b;c;z) = (1−z)^{-b} F(c−a, b; c; z/(z−1)), the Pfaff form not used internally
        let mut worst_pfaff: f64 = 0.0;
        for &(a, bb, c) in &[(1.0, 0.25, 0.75), (1.0, 0.25, 1.75)] {
            let direct = HypergeometricParams::new(a, bb, c);
            let swapped = HypergeometricParams::new(c - a, bb, c);
            for k in 0..25 {
                let z = -9.0 + 9.9 * k as f64 / 24.0;
                let lhs = hyp2f1(&direct, z)?;
                let rhs = (1.0 - z).powf(-bb) * hyp2f1(&swapped, z / (z - 1.0))?;
                worst_pfaff = worst_pfaff.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            }
        }
        b.require(worst_pfaff < 1e-10, format!("Pfaff identity over 50 points: {worst_pfaff:.3e} < 1e-10"));
        let samples: Vec<f64> = (1..=200).map(|k| 10.0 * k as f64 / 200.0).collect();
        let hs = samples.iter().map(|&a| specialfn::h_of_A(a)).collect::<Result<Vec<f64>>>()?;
        let increasing = hs.windows(2).all(|w| w[1] > w[0]) && hs[0] > 0.0;
        b.require(increasing, "H strictly increasing on 200 points of (0, 10]".into());
        let mut worst_dual: f64 = 0.0;
        for k in 1..=50 {
            let a = 5.0 * k as f64 / 50.0;
            worst_dual = worst_dual.max((specialfn::h_of_A(a)? - specialfn::h_of_A_quadrature(a)?).abs());
        }
        b.require(worst_dual < 1e-9, format!("series vs quadrature H on (0, 5]: {worst_dual:.3e} < 1e-9"));
        Ok((worst_pfaff.max(worst_dual), 1e-9, 1e-10))
    })
}

pub const CRITICAL_N: usize = 400;

pub fn check_critical_point() -> CheckResult {
    guarded(Builder::new(9, "critical_point", 10.0), |b| {
        let grid = UniformGrid::new(CRITICAL_N)?;
        let mut worst_vi = f64::INFINITY;
        let mut vi_bound = 0.0;
        for &height in &[0.02, 0.05] {
            let cp = critical_profile(height, grid)?;
            let r = cp.residuals;
            b.require(r.round_trip < 1e-10, format!("h={height}: |H(H^-1(h)) - h| = {:.3e} < 1e-10", r.round_trip));
            b.require(r.midpoint_error <= 1e-9, format!("h={height}: |u(1/2) - h| = {:.3e} <= 1e-9", r.midpoint_error));
            b.require(cp.strictly_concave_on_left_half(), format!("h={height}: strictly concave on (0, 1/2]"));
            b.require(r.ode_residual <= 1e-6, format!("h={height}: |u' - J(u)| = {:.3e} <= 1e-6", r.ode_residual));
            let check = check_critical_with(&cp.profile, &cp.obstacle, 1e-5, &cp.tangent_directions()?)?;
            b.require(
                check.passes,
                format!(
                    "h={height}: VI residual {:.6e} >= -1e-5*scale = {:.3e} (worst direction {}, scale {:.6})",
                    check.vi_residual, -check.tolerance, check.worst_direction, check.scale
                ),
            );
            if check.vi_residual / check.scale < worst_vi {
                worst_vi = check.vi_residual / check.scale;
                vi_bound = -1e-5;
            }
            // the discrete obstacle problem relaxed from the sampled profile, for comparison
            let cfg = FlowConfig {
                tau: 1.0,
                t_end: 1.0,
                inner_tol: INNER_TOL,
                inner_max_iter: 500,
                ..FlowConfig::default()
            };
            match mm_step(&cp.profile, &cp.obstacle, &cfg) {
                Ok((relaxed, _)) => {
                    let relaxed_check = check_critical(&relaxed, &cp.obstacle, 1e-5)?;
                    b.note(format!(
                        "h={height}: discrete critical point {:.3e} away in max norm has VI residual {:.3e} (scale {:.6})",
                        relaxed.sub(&cp.profile)?.max_abs(),
                        relaxed_check.vi_residual,
                        relaxed_check.scale
                    ));
                }
                Err(e) => b.note(format!("h={height}: relaxation failed: {e}")),
            }
        }
        Ok((worst_vi, vi_bound, 1e-5))
    })
}

pub const STALL_RATE: f64 = 1e-10;
pub const STALL_TIME_CAP: f64 = 1000.0;

pub fn check_convergence() -> CheckResult {
    guarded(Builder::new(10, "convergence_to_critical", 300.0), |b| {
        let grid = UniformGrid::new(CONE_N)?;
        let psi = Obstacle::cone(grid, CONE_HEIGHT)?;
        let u0 = GridFunction::u_c(grid, CONE_UC)?;
        let cfg = FlowConfig {
            tau: CONE_TAU,
            t_end: STALL_TIME_CAP,
            inner_tol: INNER_TOL,
            ..FlowConfig::default()
        };
        let traj = run_flow_from(&u0, &psi, &cfg, 0.0, StopRule::Stall { rate: STALL_RATE })?;
        b.require(
            traj.stalled,
            format!("energy decrease rate fell below {STALL_RATE:e} after {} steps", traj.steps()),
        );
        let cp = critical_profile(CONE_HEIGHT, grid)?;
        let dist = traj.last().sub(&cp.profile)?.max_abs();
        b.require(dist <= 5e-3, format!("|u_final - u_crit|_inf = {dist:.3e} <= 5e-3"));
        let e_final = *traj.energies.last().expect("nonempty");
        b.note(format!(
            "E_h(u_final) = {e_final:.12}, E_h(u_crit) = {:.12}, continuous E(u_crit) = {:.12}",
            cp.energy, cp.continuous_energy
        ));
        Ok((dist, 5e-3, 5e-3))
    })
}

pub fn check_talenti(seed: u64, samples: usize) -> CheckResult {
    guarded(Builder::new(11, "talenti", 30.0), |b| {
        let grid = UniformGrid::new(200)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_margin = f64::INFINITY;
        let mut worst_norm: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..samples {
            let u = random_concave(grid, &mut rng);
            let report = talenti_inequality_check(&u)?;
            if !report.passes {
                failures += 1;
            }
            worst_margin = worst_margin.min(report.min_gap + report.tol_mesh);
            for f in [u.clone(), talenti_source(&u)?] {
                let star = decreasing_rearrangement(&f)?;
                for &p in &[1.0, 2.0, f64::INFINITY] {
                    let base = step_norm(&f, p);
                    let d1 = (base - step_norm(&star, p)).abs();
                    let d2 = (base - symmetric_step_norm(&f, p)?).abs();
                    worst_norm = worst_norm.max(d1.max(d2) / (1.0 + base));
                }
            }
        }
        b.require(
            failures == 0,
            format!("v >= u_* - 5h(1+|f|_inf) for {samples} random concave u (min margin {worst_margin:.3e})"),
        );
        b.require(worst_norm <= 1e-8, format!("L^p norm preservation p in {{1,2,inf}}: {worst_norm:.3e} <= 1e-8"));
        let s2 = specialfn::g(2.0)?;
        let below = one_over_ginv_second_derivative(s2 - 1e-6)?;
        let above = one_over_ginv_second_derivative(s2 + 1e-6)?;
        b.require(below > 0.0 && above < 0.0, format!("(1/G^-1)'' at g(2) -+ 1e-6: {below:.3e}, {above:.3e}"));
        let top = 0.5 * specialfn::c0() - 1e-3;
        let mut pattern_ok = true;
        for k in 1..=100 {
            let s = s2 * k as f64 / 101.0;
            pattern_ok &= one_over_ginv_second_derivative(s)? > 0.0;
            let t = s2 + (top - s2) * k as f64 / 100.0;
            pattern_ok &= one_over_ginv_second_derivative(t)? < 0.0;
        }
        b.require(pattern_ok, "positive on 100 points of (0, g(2)), negative on 100 points beyond".into());
        Ok((worst_margin, 0.0, 5.0 * grid.h()))
    })
}

pub const NAVIER_NS: [usize; 3] = [100, 200, 400];
pub const NAVIER_INNER_TOL: f64 = 1e-6;

pub fn check_navier() -> CheckResult {
    guarded(Builder::new(12, "navier_diagnostic", 60.0), |b| {
        let mut values = Vec::new();
        for &n in &NAVIER_NS {
            let grid = UniformGrid::new(n)?;
            let psi = Obstacle::constant(grid, -1.0);
            let u0 = with_zero_ends(GridFunction::from_fn(grid, |x| 1e-3 * (std::f64::consts::PI * x).sin())?)?;
            let cfg = FlowConfig {
                tau: 1e-4,
                t_end: 1e-2,
                inner_tol: NAVIER_INNER_TOL,
                ..FlowConfig::default()
            };
            let traj = run_flow(&u0, &psi, &cfg)?;
            let (left, right) = navier_diagnostic(traj.last());
            values.push(left.max(right));
        }
        let hs: Vec<f64> = NAVIER_NS.iter().map(|&n| 1.0 / n as f64).collect();
        let c = values.iter().zip(&hs).map(|(v, h)| v / h).fold(0.0, f64::max);
        let orders: Vec<f64> = values.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
        b.note(format!(
            "max(|u''(0)|, |u''(1)|) at N={NAVIER_NS:?}: {}; fitted C = {c:.3e}; inner_tol {NAVIER_INNER_TOL:e}",
            sci_list(&values)
        ));
        b.require(
            values.windows(2).all(|w| w[1] < w[0]),
            "endpoint curvature decreases with h".into(),
        );
        b.require(min_order >= 1.0, format!("observed orders {orders:.3?} >= 1"));
        Ok((min_order, 1.0, NAVIER_INNER_TOL))
    })
}

/// Runs every criterion. `quick` trims the random sample counts.
pub fn run_all(seed: u64, quick: bool) -> ValidationReport {
    let mut checks = vec![
        check_constants(),
        check_energy_oracle(),
        check_uc_energy(),
        check_gradient(seed, if quick { 5 } else { 20 }),
    ];
    match cone_run() {
        Ok(run) => {
            checks.push(check_flow_inequalities(&run));
            checks.push(check_symmetry(&run));
            checks.push(check_touching(&run));
        }
        Err(e) => {
            for (id, name) in [(5, "flow_inequalities"), (6, "symmetry_preservation"), (7, "finite_time_touching")] {
                checks.push(Builder::new(id, name, 60.0).error(crate::Error::Format(format!("cone run failed: {e}"))));
            }
        }
    }
    checks.push(check_hypergeometric());
    checks.push(check_critical_point());
    checks.push(check_convergence());
    checks.push(check_talenti(seed, if quick { 5 } else { 20 }));
    checks.push(check_navier());
    ValidationReport::from_checks(checks, quick, seed)
}
