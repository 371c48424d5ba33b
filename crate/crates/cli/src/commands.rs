//! Subcommand implementations. Each returns the files it wrote or a
//! [`CliError`] carrying the exit code.

use std::path::{Path, PathBuf};

use elasticflow::critical::{check_critical_with, critical_profile, CriticalCheck, CriticalResiduals};
use elasticflow::flow::{
    dissipation_report, interpolate_constant, navier_diagnostic, run_flow_from, step_inequality_report, touch_scan,
    touch_window, StopRule, Trajectory, TOUCH_WINDOW_FORMULA,
};
use elasticflow::io::{
    append_trajectory_csv, fmt15, read_checkpoint, read_profile, write_checkpoint, write_critical_csv, write_json,
    write_rearrange_csv, write_snapshot_csv, write_trajectory_csv, RunSummary, CHECKPOINT_STATE, CHECKPOINT_SUMMARY,
};
use elasticflow::rearrange::{rearrange, talenti_comparison};
use elasticflow::validation::{run_all, ValidationReport};
use elasticflow::{specialfn, UniformGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check_admissible, load_config, InitialSpec, ObstacleSpec, RunConfig};
use crate::error::{CliError, Context};
use crate::plot::{emit_plot, LineStyle, Series};

/// Symmetry residual allowed for symmetric input data.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// `C` in the endpoint-curvature bound `|u''| ≤ C h` of a single run.
pub const NAVIER_CONSTANT: f64 = 1.0;

pub const CHECKS_JSON: &str = "checks.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCheck {
    pub name: String,
    pub status: CheckStatus,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
}

impl RunCheck {
    fn new(name: &str, pass: bool, measured: f64, bound: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: Some(measured),
            bound: Some(bound),
            detail,
        }
    }

    fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            measured: None,
            bound: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub out_dir: PathBuf,
    pub summary: RunSummary,
    pub checks: Vec<RunCheck>,
    pub files: Vec<PathBuf>,
}

impl SimulationOutcome {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn cone_height(cfg: &RunConfig) -> Option<f64> {
    match cfg.obstacle {
        ObstacleSpec::Cone { height } => Some(height),
        _ => None,
    }
}

fn run_checks(
    cfg: &RunConfig,
    traj: &Trajectory,
    symmetric_input: bool,
    l0: Option<Result<f64, String>>,
) -> Vec<RunCheck> {
    let mut checks = Vec::new();
    let c = cfg.checks;
    if c.symmetry {
        checks.push(if symmetric_input {
            let r = traj.max_symmetry_residual();
            RunCheck::new("symmetry", r <= SYMMETRY_TOL, r, SYMMETRY_TOL, "max_k max_i |u_i - u_(n-i)|".into())
        } else {
            RunCheck::skipped("symmetry", "initial data or obstacle is not symmetric")
        });
    }
    if c.dissipation {
        let d = dissipation_report(traj);
        checks.push(RunCheck::new(
            "dissipation",
            d.holds,
            d.lhs,
            d.rhs,
            "E(u_K) + sum |du|^2/(2 tau) <= E(u_0) + slack".into(),
        ));
    }
    if c.stanminimov {
        let s = step_inequality_report(traj);
        checks.push(RunCheck::new(
            "stanminimov",
            s.holds,
            s.worst_excess,
            0.0,
            format!(
                "per-step E_(k+1) + |du|^2/(2 tau) <= E_k; {} violations, {} energy increases",
                s.violations, s.energy_increases
            ),
        ));
    }
    if c.kkt {
        let worst = traj
            .kkt
            .iter()
            .map(|k| (k.stationarity_residual / k.tolerance).max(-k.multiplier_min / k.tolerance))
            .fold(0.0, f64::max);
        let valid = traj.kkt.iter().all(|k| k.is_valid());
        checks.push(RunCheck::new("kkt", valid, worst, 1.0, "worst KKT residual / (inner_tol * scale)".into()));
    }
    if c.touch_window {
        checks.push(match l0 {
            Some(Ok(window)) => {
                let scan = touch_scan(traj, window);
                RunCheck::new(
                    "touch_window",
                    scan.satisfied,
                    scan.longest_gap,
                    window,
                    format!(
                        "longest touch-free stretch vs L0 ({TOUCH_WINDOW_FORMULA}); first touch at t = {}",
                        scan.first_touch_time.map_or("never".into(), fmt15)
                    ),
                )
            }
            Some(Err(why)) => RunCheck::skipped("touch_window", why),
            None => RunCheck::skipped("touch_window", "needs a cone obstacle"),
        });
    }
    if c.navier {
        let (left, right) = navier_diagnostic(traj.last());
        let h = traj.grid.h();
        let value = left.max(right);
        checks.push(RunCheck::new(
            "navier",
            value <= NAVIER_CONSTANT * h,
            value,
            NAVIER_CONSTANT * h,
            "max(|u''(0)|, |u''(1)|) of the final iterate vs C h".into(),
        ));
    }
    checks
}

/// Runs a configured flow into `out`, optionally continuing a checkpoint there.
pub fn run_simulation(
    cfg: &RunConfig,
    out: &Path,
    allow_invalid: bool,
    resume: bool,
) -> Result<SimulationOutcome, CliError> {
    let inputs = cfg.build(allow_invalid)?;
    create_dir(out)?;
    let traj_path = out.join(&cfg.outputs.trajectory_csv);
    let previous = if resume && out.join(CHECKPOINT_SUMMARY).exists() && out.join(CHECKPOINT_STATE).exists() {
        let (summary, state) = read_checkpoint(out).context(|| format!("reading checkpoint in {}", out.display()))?;
        if state.grid() != inputs.grid || summary.tau != inputs.flow.tau {
            return Err(CliError::Config(format!(
                "checkpoint in {} was written with grid_n = {}, tau = {}; the config has grid_n = {}, tau = {}",
                out.display(),
                summary.grid_n,
                summary.tau,
                inputs.grid.n(),
                inputs.flow.tau
            )));
        }
        check_admissible(&state, &inputs.obstacle)?;
        Some((summary, state))
    } else {
        None
    };
    let (u_start, t0) = match &previous {
        Some((summary, state)) => (state.clone(), summary.t_final),
        None => (inputs.initial.clone(), 0.0),
    };
    let remaining_steps = ((inputs.flow.t_end - t0) / inputs.flow.tau).round();
    if remaining_steps < 1.0 {
        return Err(CliError::Usage(format!(
            "checkpoint is already at t = {t0}, nothing to do before t_end = {}",
            inputs.flow.t_end
        )));
    }
    let flow = elasticflow::flow::FlowConfig {
        t_end: remaining_steps * inputs.flow.tau,
        ..inputs.flow
    };
    let traj = run_flow_from(&u_start, &inputs.obstacle, &flow, t0, StopRule::Horizon)
        .context(|| "flow run".to_string())?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }

    let critical = match cone_height(cfg) {
        Some(height) => Some(critical_profile(height, inputs.grid).context(|| "critical profile".to_string())?),
        None => None,
    };
    let e0 = elasticflow::discretization::energy(&inputs.initial).context(|| "initial energy".to_string())?;
    let l0 = critical.as_ref().map(|cp| {
        touch_window(e0, cp.energy).map_err(|e| format!("L0 unavailable: {e}"))
    });
    if let Some(Ok(window)) = &l0 {
        println!("touch window: {TOUCH_WINDOW_FORMULA} = {}", fmt15(*window));
    }
    let l0_value = l0.as_ref().and_then(|r| r.as_ref().ok().copied());

    let mut files = Vec::new();
    match &previous {
        Some((summary, _)) if traj_path.exists() => {
            append_trajectory_csv(&traj_path, &traj, summary.steps).context(|| "trajectory csv".to_string())?
        }
        _ => write_trajectory_csv(&traj_path, &traj).context(|| "trajectory csv".to_string())?,
    }
    files.push(traj_path);
    for &t in &cfg.outputs.snapshots {
        if t < traj.t0 {
            continue;
        }
        let u = interpolate_constant(&traj, t).context(|| format!("snapshot at t = {t}"))?;
        let path = out.join(format!("snapshot_t{}.csv", fmt15(t)));
        write_snapshot_csv(&path, &u, &inputs.obstacle).context(|| "snapshot csv".to_string())?;
        files.push(path);
    }

    let summary = match &previous {
        Some((prev, _)) => RunSummary::resumed(prev, &traj, l0_value),
        None => RunSummary::from_trajectory(&traj, l0_value),
    };
    write_checkpoint(out, &summary, traj.last()).context(|| "checkpoint".to_string())?;
    files.push(out.join(CHECKPOINT_SUMMARY));
    files.push(out.join(CHECKPOINT_STATE));
    if cfg.outputs.summary_json != CHECKPOINT_SUMMARY {
        let path = out.join(&cfg.outputs.summary_json);
        write_json(&path, &summary).context(|| "summary json".to_string())?;
        files.push(path);
    }

    let symmetric_input = inputs.obstacle.is_symmetric()
        && elasticflow::flow::symmetry_residual(&u_start) <= SYMMETRY_TOL;
    let checks = run_checks(cfg, &traj, symmetric_input, l0);
    let checks_path = out.join(CHECKS_JSON);
    write_json(&checks_path, &checks).context(|| "checks json".to_string())?;
    files.push(checks_path);

    if let Some(name) = &cfg.outputs.plot_svg {
        let path = out.join(name);
        let mut series = vec![
            Series::from_grid("u(0)", &u_start, LineStyle::Solid),
            Series::from_grid(format!("u(t = {})", fmt15(traj.t_last())), traj.last(), LineStyle::Solid),
            Series::from_grid("psi", &inputs.obstacle.samples, LineStyle::Dashed),
        ];
        if let Some(cp) = &critical {
            series.push(Series::from_grid("critical", &cp.profile, LineStyle::Dashed));
        }
        emit_plot("elastic flow", &series, &path)?;
        files.push(path);
    }
    Ok(SimulationOutcome {
        out_dir: out.to_path_buf(),
        summary,
        checks,
        files,
    })
}

pub fn cmd_simulate(config: &Path, out: &Path, allow_invalid: bool, resume: bool) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let outcome = run_simulation(&cfg, out, allow_invalid, resume)?;
    let s = &outcome.summary;
    println!(
        "steps {} to t = {}: final energy {}, first touch at step {}",
        s.steps,
        fmt15(s.t_final),
        fmt15(s.final_energy),
        s.touched_at_step.map_or("none".into(), |k| k.to_string())
    );
    for c in &outcome.checks {
        println!("check {:<13} {:?}  {}", c.name, c.status, c.detail);
    }
    let failed = outcome.failed_checks();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalSummary {
    pub height: f64,
    pub n: usize,
    pub a: f64,
    pub energy: f64,
    pub continuous_energy: f64,
    pub u_half: f64,
    pub slope_at_zero: f64,
    pub residuals: CriticalResiduals,
    pub check: CriticalCheck,
}

pub const CRITICAL_CSV: &str = "critical.csv";
pub const CRITICAL_JSON: &str = "critical.json";
pub const CRITICAL_SVG: &str = "critical.svg";

pub fn cmd_critical(height: f64, n: usize, out: &Path, plot: bool) -> Result<CriticalSummary, CliError> {
    let grid = UniformGrid::new(n).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(height > 0.0) || !height.is_finite() {
        return Err(CliError::Usage(format!("--height must be positive, got {height}")));
    }
    let cp = critical_profile(height, grid).context(|| format!("critical profile for height {height}"))?;
    let check = check_critical_with(&cp.profile, &cp.obstacle, 1e-5, &cp.tangent_directions().context(|| "tangents".into())?)
        .context(|| "critical check".to_string())?;
    create_dir(out)?;
    write_critical_csv(&out.join(CRITICAL_CSV), &cp).context(|| "critical csv".to_string())?;
    let summary = CriticalSummary {
        height,
        n,
        a: cp.a,
        energy: cp.energy,
        continuous_energy: cp.continuous_energy,
        u_half: cp.profile.values()[n / 2],
        slope_at_zero: cp.slope_profile.values()[0],
        residuals: cp.residuals,
        check,
    };
    write_json(&out.join(CRITICAL_JSON), &summary).context(|| "critical json".to_string())?;
    if plot {
        emit_plot(
            &format!("critical point, height {}", fmt15(height)),
            &[
                Series::from_grid("u", &cp.profile, LineStyle::Solid),
                Series::from_grid("psi", &cp.obstacle.samples, LineStyle::Dashed),
            ],
            &out.join(CRITICAL_SVG),
        )?;
    }
    println!(
        "A = {}, E_h = {}, u(1/2) = {}, ode residual {}",
        fmt15(cp.a),
        fmt15(cp.energy),
        fmt15(summary.u_half),
        fmt15(cp.residuals.ode_residual)
    );
    Ok(summary)
}

pub fn cmd_rearrange(input: &Path, out: &Path) -> Result<(), CliError> {
    let f = read_profile(input).map_err(|e| CliError::Config(e.to_string()))?;
    let pair = rearrange(&f).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let v = match talenti_comparison(&f) {
        Ok(v) => Some(v),
        Err(e) => {
            eprintln!("warning: no comparison function, column v left empty: {e}");
            None
        }
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_rearrange_csv(out, &f, &pair, v.as_ref()).context(|| format!("writing {}", out.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SpecialFn {
    G,
    Ginv,
    C0,
    H,
    Hinv,
    Uc,
}

/// Values of a special function; `uc` takes `c` followed by the `x` values.
pub fn eval_specialfn(which: SpecialFn, args: &[f64]) -> Result<Vec<f64>, CliError> {
    let each = |f: fn(f64) -> elasticflow::Result<f64>| -> Result<Vec<f64>, CliError> {
        if args.is_empty() {
            return Err(CliError::Usage("expected at least one argument".into()));
        }
        args.iter()
            .map(|&a| f(a).context(|| format!("evaluating at {a}")))
            .collect()
    };
    match which {
        SpecialFn::C0 => {
            if !args.is_empty() {
                return Err(CliError::Usage("c0 takes no arguments".into()));
            }
            Ok(vec![specialfn::c0()])
        }
        SpecialFn::G => each(specialfn::g),
        SpecialFn::Ginv => each(specialfn::g_inv),
        SpecialFn::H => each(specialfn::h_of_A),
        SpecialFn::Hinv => each(specialfn::h_inv),
        SpecialFn::Uc => {
            let (&c, xs) = args
                .split_first()
                .filter(|(_, xs)| !xs.is_empty())
                .ok_or_else(|| CliError::Usage("uc expects c followed by at least one x".into()))?;
            xs.iter()
                .map(|&x| specialfn::u_c_value(c, x).context(|| format!("u_c({c}, {x})")))
                .collect()
        }
    }
}

pub const VALIDATION_JSON: &str = "validation_report.json";

pub fn cmd_validate(quick: bool, seed: u64, out: &Path) -> Result<ValidationReport, CliError> {
    let report = run_all(seed, quick);
    for check in &report.checks {
        println!("{}", check.line());
    }
    create_dir(out)?;
    write_json(&out.join(VALIDATION_JSON), &report).context(|| "validation report".to_string())?;
    let passed = report.checks.iter().filter(|c| c.passed()).count();
    println!("{passed}/{} criteria passed", report.checks.len());
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Tau,
    TEnd,
    GridN,
    Height,
    C,
    Scale,
    Level,
}

fn apply_param(cfg: &RunConfig, param: SweepParam, value: f64) -> Result<RunConfig, CliError> {
    let mut c = cfg.clone();
    let mismatch = |what: &str| CliError::Usage(format!("sweep parameter {param:?} needs {what}"));
    match param {
        SweepParam::Tau => c.tau = value,
        SweepParam::TEnd => c.t_end = value,
        SweepParam::GridN => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CliError::Usage(format!("grid_n must be a whole number, got {value}")));
            }
            c.grid_n = value as usize;
        }
        SweepParam::Height => match &mut c.obstacle {
            ObstacleSpec::Cone { height } => *height = value,
            _ => return Err(mismatch("a cone obstacle")),
        },
        SweepParam::Level => match &mut c.obstacle {
            ObstacleSpec::Constant { level } => *level = value,
            _ => return Err(mismatch("a constant obstacle")),
        },
        SweepParam::C => match &mut c.initial {
            InitialSpec::Uc { c } => *c = value,
            _ => return Err(mismatch("u_c initial data")),
        },
        SweepParam::Scale => match &mut c.initial {
            InitialSpec::ScaledBump { scale } => *scale = value,
            _ => return Err(mismatch("scaled_bump initial data")),
        },
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCase {
    pub case: usize,
    pub value: f64,
    pub dir: String,
    pub exit_code: u8,
    pub final_energy: Option<f64>,
    pub touched_at_step: Option<usize>,
    pub failed_checks: Vec<String>,
    pub message: String,
}

pub const SWEEP_JSON: &str = "sweep.json";

/// Runs one case per value concurrently; each case writes only inside its own directory.
pub fn cmd_sweep(
    config: &Path,
    out: &Path,
    param: SweepParam,
    values: &[f64],
    allow_invalid: bool,
) -> Result<Vec<SweepCase>, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("--values must list at least one value".into()));
    }
    let base = load_config(config)?;
    let cases: Vec<RunConfig> = values
        .iter()
        .map(|&v| apply_param(&base, param, v))
        .collect::<Result<_, _>>()?;
    create_dir(out)?;
    let results: Vec<SweepCase> = cases
        .par_iter()
        .enumerate()
        .map(|(k, cfg)| {
            let dir_name = format!("case_{k:03}");
            let outcome = run_simulation(cfg, &out.join(&dir_name), allow_invalid, false);
            let mut case = SweepCase {
                case: k,
                value: values[k],
                dir: dir_name,
                exit_code: 0,
                final_energy: None,
                touched_at_step: None,
                failed_checks: Vec::new(),
                message: String::new(),
            };
            match outcome {
                Ok(o) => {
                    case.final_energy = Some(o.summary.final_energy);
                    case.touched_at_step = o.summary.touched_at_step;
                    case.failed_checks = o.failed_checks().into_iter().map(String::from).collect();
                    if !case.failed_checks.is_empty() {
                        case.exit_code = 1;
                        case.message = format!("failed checks: {}", case.failed_checks.join(", "));
                    }
                }
                Err(e) => {
                    case.exit_code = e.exit_code();
                    case.message = e.to_string();
                }
            }
            case
        })
        .collect();
    write_json(&out.join(SWEEP_JSON), &results).context(|| "sweep index".to_string())?;
    for c in &results {
        println!(
            "case {:03} value {}: exit {} {}",
            c.case,
            fmt15(c.value),
            c.exit_code,
            c.message
        );
    }
    Ok(results)
}

/// Worst exit code of a sweep.
pub fn sweep_exit_code(cases: &[SweepCase]) -> u8 {
    cases.iter().map(|c| c.exit_code).max().unwrap_or(0)
}
