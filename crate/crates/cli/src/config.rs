//! Strict JSON run configuration.

use std::path::{Path, PathBuf};

use elasticflow::flow::{FlowConfig, InnerSolver};
use elasticflow::io::read_profile;
use elasticflow::{GridFunction, Obstacle, UniformGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MIN_FLOW_CELLS: usize = 16;

fn default_tau() -> f64 {
    FlowConfig::default().tau
}
fn default_t_end() -> f64 {
    FlowConfig::default().t_end
}
fn default_inner_tol() -> f64 {
    FlowConfig::default().inner_tol
}
fn default_inner_max_iter() -> usize {
    FlowConfig::default().inner_max_iter
}
fn default_armijo_c() -> f64 {
    FlowConfig::default().armijo_c
}
fn default_backtrack() -> f64 {
    FlowConfig::default().backtrack
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    /// `ψ(½) = height`, `ψ(0) = ψ(1) = −height`.
    Cone { height: f64 },
    /// Nodal values from a `x,value` profile CSV.
    Table { path: PathBuf },
    Constant { level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Uc { c: f64 },
    Table { path: PathBuf },
    /// `scale · sin(πx)`.
    ScaledBump { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "Outputs::default_trajectory")]
    pub trajectory_csv: String,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "Outputs::default_summary")]
    pub summary_json: String,
    #[serde(default)]
    pub plot_svg: Option<String>,
}

impl Outputs {
    fn default_trajectory() -> String {
        "trajectory.csv".into()
    }
    fn default_summary() -> String {
        "summary.json".into()
    }
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            trajectory_csv: Self::default_trajectory(),
            snapshots: Vec::new(),
            summary_json: Self::default_summary(),
            plot_svg: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default = "default_true")]
    pub symmetry: bool,
    #[serde(default = "default_true")]
    pub dissipation: bool,
    #[serde(default = "default_true")]
    pub stanminimov: bool,
    #[serde(default = "default_true")]
    pub kkt: bool,
    #[serde(default = "default_true")]
    pub touch_window: bool,
    #[serde(default)]
    pub navier: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            symmetry: true,
            dissipation: true,
            stanminimov: true,
            kkt: true,
            touch_window: true,
            navier: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid_n: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_inner_max_iter")]
    pub inner_max_iter: usize,
    #[serde(default = "default_armijo_c")]
    pub armijo_c: f64,
    #[serde(default = "default_backtrack")]
    pub backtrack: f64,
    #[serde(default)]
    pub coincidence_tol: Option<f64>,
    #[serde(default)]
    pub solver: InnerSolver,
    pub obstacle: ObstacleSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub allow_invalid_obstacle: bool,
    /// Directory that relative table paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Help text listing every key and its default.
pub const CONFIG_HELP: &str = "\
Config file (JSON, unknown keys rejected):
  grid_n                  cells of the uniform grid on [0, 1], at least 16 (required)
  tau                     time step (default 1e-3)
  t_end                   horizon (default 1)
  inner_tol               relative KKT tolerance of each step (default 1e-8)
  inner_max_iter          inner iteration cap (default 200)
  armijo_c                sufficient-decrease constant in (0, 1) (default 1e-4)
  backtrack               step-shrink factor in (0, 1) (default 0.5)
  coincidence_tol         contact gap threshold (default 10 inner_tol sqrt(h))
  solver                  \"projected_newton\" (default) or \"projected_gradient\"
  obstacle                {\"type\": \"cone\", \"height\": H} | {\"type\": \"table\", \"path\": P}
                          | {\"type\": \"constant\", \"level\": L}   (required)
  initial                 {\"type\": \"uc\", \"c\": C} | {\"type\": \"table\", \"path\": P}
                          | {\"type\": \"scaled_bump\", \"scale\": S} for S sin(pi x)   (required)
  outputs                 {\"trajectory_csv\": \"trajectory.csv\", \"snapshots\": [times],
                           \"summary_json\": \"summary.json\", \"plot_svg\": null}
  checks                  {\"symmetry\": true, \"dissipation\": true, \"stanminimov\": true,
                           \"kkt\": true, \"touch_window\": true, \"navier\": false}
  allow_invalid_obstacle  run obstacles with psi(0), psi(1) >= 0 or max psi <= 0 (default false)
Table paths are relative to the config file.";

/// Fully built inputs of a flow run.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub grid: UniformGrid,
    pub obstacle: Obstacle,
    pub initial: GridFunction,
    pub flow: FlowConfig,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

/// Parses and checks a config; parse errors carry line and column.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

impl RunConfig {
    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            tau: self.tau,
            t_end: self.t_end,
            inner_tol: self.inner_tol,
            inner_max_iter: self.inner_max_iter,
            armijo_c: self.armijo_c,
            backtrack: self.backtrack,
            coincidence_tol: self.coincidence_tol,
            solver: self.solver,
        }
    }

    /// Semantic checks that need no file access.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid_n < MIN_FLOW_CELLS {
            return Err(field_error("grid_n", format!("must be at least {MIN_FLOW_CELLS}, got {}", self.grid_n)));
        }
        self.flow_config().validate().map_err(|e| {
            let msg = e.to_string();
            let field = ["inner_max_iter", "inner_tol", "t_end", "tau", "armijo_c", "backtrack", "coincidence_tol"]
                .into_iter()
                .find(|f| msg.contains(f))
                .unwrap_or("flow");
            field_error(field, msg)
        })?;
        match self.obstacle {
            ObstacleSpec::Cone { height } if !(height > 0.0 && height.is_finite()) => {
                return Err(field_error("obstacle.height", format!("must be positive, got {height}")));
            }
            ObstacleSpec::Constant { level } if !level.is_finite() => {
                return Err(field_error("obstacle.level", "must be finite"));
            }
            _ => {}
        }
        match self.initial {
            InitialSpec::Uc { c } if !(c > 0.0 && c < elasticflow::specialfn::c0()) => {
                return Err(field_error("initial.c", format!("must lie in (0, c0), got {c}")));
            }
            InitialSpec::ScaledBump { scale } if !scale.is_finite() => {
                return Err(field_error("initial.scale", "must be finite"));
            }
            _ => {}
        }
        for &t in &self.outputs.snapshots {
            if !(t >= 0.0 && t <= self.t_end) {
                return Err(field_error("outputs.snapshots", format!("time {t} outside [0, t_end]")));
            }
        }
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn read_table(&self, field: &str, path: &Path, grid: UniformGrid) -> Result<GridFunction, CliError> {
        let resolved = self.resolve(path);
        let table = read_profile(&resolved).map_err(|e| CliError::Config(format!("field `{field}`: {e}")))?;
        if table.grid() != grid {
            return Err(CliError::Config(format!(
                "field `{field}`: shape mismatch: {} has {} nodes but grid_n = {} needs {}",
                resolved.display(),
                table.len(),
                grid.n(),
                grid.nodes()
            )));
        }
        Ok(table)
    }

    pub fn build_obstacle(&self, grid: UniformGrid) -> Result<Obstacle, CliError> {
        match &self.obstacle {
            ObstacleSpec::Cone { height } => {
                Obstacle::cone(grid, *height).map_err(|e| field_error("obstacle", e))
            }
            ObstacleSpec::Table { path } => Ok(Obstacle::table(self.read_table("obstacle.path", path, grid)?)),
            ObstacleSpec::Constant { level } => Ok(Obstacle::constant(grid, *level)),
        }
    }

    pub fn build_initial(&self, grid: UniformGrid) -> Result<GridFunction, CliError> {
        match &self.initial {
            InitialSpec::Uc { c } => GridFunction::u_c(grid, *c).map_err(|e| field_error("initial", e)),
            InitialSpec::Table { path } => self.read_table("initial.path", path, grid),
            InitialSpec::ScaledBump { scale } => {
                let mut u = GridFunction::from_fn(grid, |x| scale * (std::f64::consts::PI * x).sin())
                    .map_err(|e| field_error("initial", e))?
                    .into_values();
                u[0] = 0.0;
                u[grid.n()] = 0.0;
                GridFunction::new(grid, u).map_err(|e| field_error("initial", e))
            }
        }
    }

    /// Builds grid, obstacle and initial data; `allow_invalid` widens
    /// `allow_invalid_obstacle`.
    pub fn build(&self, allow_invalid: bool) -> Result<RunInputs, CliError> {
        let grid = UniformGrid::new(self.grid_n).map_err(|e| field_error("grid_n", e))?;
        let obstacle = self.build_obstacle(grid)?;
        if !obstacle.assumption1_ok && !(allow_invalid || self.allow_invalid_obstacle) {
            return Err(field_error(
                "obstacle",
                "violates Assumption 1 (needs psi(0) < 0, psi(1) < 0 and max psi > 0); \
                 pass --allow-invalid-obstacle or set allow_invalid_obstacle to run anyway",
            ));
        }
        let initial = self.build_initial(grid)?;
        check_admissible(&initial, &obstacle)?;
        Ok(RunInputs {
            grid,
            obstacle,
            initial,
            flow: self.flow_config(),
        })
    }
}

pub fn check_admissible(u: &GridFunction, obstacle: &Obstacle) -> Result<(), CliError> {
    if !u.has_dirichlet_ends() {
        return Err(field_error("initial", "must vanish at x = 0 and x = 1"));
    }
    if let Some(i) = u.values().iter().zip(obstacle.values()).position(|(a, b)| a < b) {
        return Err(field_error(
            "initial",
            format!(
                "lies below the obstacle at node {i} (u = {}, psi = {})",
                u.values()[i],
                obstacle.values()[i]
            ),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"grid_n": 200, "tau": 1e-3, "t_end": 1,
        "obstacle": {"type": "cone", "height": 0.02}, "initial": {"type": "uc", "c": 0.5}}"#;

    #[test]
    fn minimal_cone_config_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.grid_n, 200);
        assert_eq!(cfg.inner_tol, 1e-8);
        assert_eq!(cfg.checks, Checks::default());
        assert_eq!(cfg.outputs, Outputs::default());
        let inputs = cfg.build(false).unwrap();
        assert!(inputs.obstacle.admits(&inputs.initial));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"tau\"", "\"tao\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("tao") && err.contains("line"), "{err}");
        let nested = MINIMAL.replace("\"height\"", "\"hieght\"");
        assert!(parse_config(&nested).is_err());
    }

    #[test]
    fn parse_errors_carry_line_info() {
        let err = parse_config("{\n  \"grid_n\": 200,\n  oops\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let err = parse_config(&MINIMAL.replace("200", "8")).unwrap_err().to_string();
        assert!(err.contains("grid_n"), "{err}");
        let err = parse_config(&MINIMAL.replace("\"tau\": 1e-3", "\"tau\": -1")).unwrap_err().to_string();
        assert!(err.contains("`tau`"), "{err}");
        let err = parse_config(&MINIMAL.replace("\"c\": 0.5", "\"c\": 3")).unwrap_err().to_string();
        assert!(err.contains("initial.c"), "{err}");
    }

    #[test]
    fn zero_level_obstacle_names_assumption_1() {
        let text = r#"{"grid_n": 32, "obstacle": {"type": "constant", "level": 0},
            "initial": {"type": "scaled_bump", "scale": 0.1}}"#;
        let cfg = parse_config(text).unwrap();
        let err = cfg.build(false).unwrap_err().to_string();
        assert!(err.contains("Assumption 1"), "{err}");
        assert!(cfg.build(true).is_ok());
    }

    #[test]
    fn table_initial_with_wrong_node_count_is_a_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let g = UniformGrid::new(20).unwrap();
        elasticflow::io::write_profile(&dir.path().join("u0.csv"), &GridFunction::zeros(g)).unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"grid_n": 32, "obstacle": {"type": "cone", "height": 0.02},
                "initial": {"type": "table", "path": "u0.csv"}}"#,
        )
        .unwrap();
        let cfg = load_config(&path).unwrap();
        let err = cfg.build(false).unwrap_err().to_string();
        assert!(err.contains("shape mismatch"), "{err}");
    }

    #[test]
    fn initial_below_obstacle_is_rejected() {
        let text = r#"{"grid_n": 32, "obstacle": {"type": "cone", "height": 0.5},
            "initial": {"type": "scaled_bump", "scale": 0.1}}"#;
        let err = parse_config(text).unwrap().build(false).unwrap_err().to_string();
        assert!(err.contains("below the obstacle"), "{err}");
    }
}
