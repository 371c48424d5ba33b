//! CSV and JSON artifacts. Every number is written with 15 significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::critical::CriticalPoint;
use crate::discretization::{GridFunction, Obstacle, UniformGrid};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::rearrange::RearrangedPair;

/// `%.15g`-style formatting.
pub fn fmt15(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.14e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if x.is_finite() {
        fmt15(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Rounds every number inside a JSON value to 15 significant digits.
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round15(x))) {
                    *n = r;
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serializes `data` as pretty JSON with rounded numbers.
pub fn to_json_string<T: Serialize>(data: &T) -> Result<String> {
    let mut value = serde_json::to_value(data).map_err(|e| Error::Format(e.to_string()))?;
    round_json(&mut value);
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, data: &T) -> Result<()> {
    let mut file = File::create(path)?;
    file.write_all(to_json_string(data)?.as_bytes())?;
    Ok(())
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a `x,value` profile; the `x` column must be the uniform grid on `[0, 1]`.
pub fn read_profile(path: &Path) -> Result<GridFunction> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
        return Err(Error::Format(format!(
            "{}: expected header `x,value`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<f64> {
            record
                .get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("{}: bad number on data row {}", path.display(), line + 1)))
        };
        xs.push(parse(0)?);
        values.push(parse(1)?);
    }
    if values.len() < UniformGrid::MIN_CELLS + 1 {
        return Err(Error::Shape(format!("{}: only {} rows", path.display(), values.len())));
    }
    let grid = UniformGrid::new(values.len() - 1)?;
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.x(i)).abs() > 1e-9 {
            return Err(Error::Shape(format!(
                "{}: row {} has x = {x}, expected the uniform node {}",
                path.display(),
                i + 1,
                grid.x(i)
            )));
        }
    }
    GridFunction::new(grid, values)
}

pub fn write_profile(path: &Path, u: &GridFunction) -> Result<()> {
    let grid = u.grid();
    write_rows(
        path,
        &["x", "value"],
        u.values().iter().enumerate().map(|(i, v)| vec![fmt15(grid.x(i)), fmt15(*v)]),
    )
}

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "step",
    "time",
    "energy",
    "step_l2",
    "coincidence_count",
    "symmetry_residual",
    "inner_iters",
    "kkt_stationarity",
    "kkt_multiplier_min",
];

/// One row per step; row `k` describes the iterate after step `k`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    write_rows(path, &TRAJECTORY_HEADER, trajectory_rows(traj, 0))
}

/// Appends the steps of a resumed run, numbered after `step_offset`.
pub fn append_trajectory_csv(path: &Path, traj: &Trajectory, step_offset: usize) -> Result<()> {
    let file = std::fs::OpenOptions::new().append(true).open(path)?;
    let mut writer = csv::Writer::from_writer(file);
    for row in trajectory_rows(traj, step_offset) {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn trajectory_rows(traj: &Trajectory, step_offset: usize) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..traj.steps()).map(move |k| {
        let kkt = &traj.kkt[k];
        let multiplier = if kkt.multiplier_min.is_finite() {
            fmt15(kkt.multiplier_min)
        } else {
            String::new()
        };
        vec![
            (step_offset + k + 1).to_string(),
            fmt15(traj.times[k + 1]),
            fmt15(traj.energies[k + 1]),
            fmt15(traj.step_norms[k]),
            traj.coincidence_counts[k + 1].to_string(),
            fmt15(traj.symmetry_residuals[k + 1]),
            traj.inner_iterations[k].to_string(),
            fmt15(kkt.stationarity_residual),
            multiplier,
        ]
    })
}

pub fn write_snapshot_csv(path: &Path, u: &GridFunction, obstacle: &Obstacle) -> Result<()> {
    let grid = u.grid();
    let rows = u.values().iter().zip(obstacle.values()).enumerate().map(|(i, (u, p))| {
        vec![fmt15(grid.x(i)), fmt15(*u), fmt15(*p), fmt15(u - p)]
    });
    write_rows(path, &["x", "u", "psi", "gap"], rows)
}

pub fn write_critical_csv(path: &Path, cp: &CriticalPoint) -> Result<()> {
    let grid = cp.grid;
    let rows = (0..grid.nodes()).map(|i| {
        vec![
            fmt15(grid.x(i)),
            fmt15(cp.profile.values()[i]),
            fmt15(cp.slope_profile.values()[i]),
            fmt15(cp.obstacle.values()[i]),
        ]
    });
    write_rows(path, &["x", "u", "uprime", "psi"], rows)
}

/// The `v` column is left empty when no comparison function is available.
pub fn write_rearrange_csv(path: &Path, f: &GridFunction, pair: &RearrangedPair, v: Option<&GridFunction>) -> Result<()> {
    let grid = f.grid();
    let rows = (0..grid.nodes()).map(|i| {
        vec![
            fmt15(grid.x(i)),
            fmt15(f.values()[i]),
            fmt15(pair.f_star.values()[i]),
            fmt15(pair.f_sym.values()[i]),
            v.map_or(String::new(), |v| fmt15(v.values()[i])),
        ]
    });
    write_rows(path, &["x", "f", "f_star", "f_sym", "v"], rows)
}

/// Run summary; together with the final iterate it forms a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_energy: f64,
    pub dissipation_lhs: f64,
    pub dissipation_rhs: f64,
    pub touched_at_step: Option<usize>,
    pub l0_window: Option<f64>,
    pub warnings: Vec<String>,
    pub grid_n: usize,
    pub tau: f64,
    pub steps: usize,
    pub t_final: f64,
}

impl RunSummary {
    pub fn from_trajectory(traj: &Trajectory, l0_window: Option<f64>) -> Self {
        let report = crate::flow::dissipation_report(traj);
        Self {
            final_energy: report.final_energy,
            dissipation_lhs: report.lhs,
            dissipation_rhs: report.rhs,
            touched_at_step: traj.first_touch(),
            l0_window,
            warnings: traj.warnings.clone(),
            grid_n: traj.grid.n(),
            tau: traj.tau,
            steps: traj.steps(),
            t_final: traj.t_last(),
        }
    }

    /// Summary of `prev` followed by the resumed segment `traj`.
    pub fn resumed(prev: &RunSummary, traj: &Trajectory, l0_window: Option<f64>) -> Self {
        let next = Self::from_trajectory(traj, l0_window);
        let report = crate::flow::dissipation_report(traj);
        let mut warnings = prev.warnings.clone();
        for w in next.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        Self {
            final_energy: next.final_energy,
            dissipation_lhs: prev.dissipation_lhs - prev.final_energy + report.lhs,
            dissipation_rhs: prev.dissipation_rhs + report.slack,
            touched_at_step: prev.touched_at_step.or(next.touched_at_step.map(|k| prev.steps + k)),
            l0_window: prev.l0_window.or(l0_window),
            warnings,
            grid_n: next.grid_n,
            tau: next.tau,
            steps: prev.steps + next.steps,
            t_final: next.t_final,
        }
    }
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// File names of a checkpoint inside an output directory.
pub const CHECKPOINT_SUMMARY: &str = "summary.json";
pub const CHECKPOINT_STATE: &str = "final_state.csv";

pub fn write_checkpoint(dir: &Path, summary: &RunSummary, last: &GridFunction) -> Result<()> {
    write_json(&dir.join(CHECKPOINT_SUMMARY), summary)?;
    write_profile(&dir.join(CHECKPOINT_STATE), last)
}

/// Loads `(summary, final iterate)` written by [`write_checkpoint`].
pub fn read_checkpoint(dir: &Path) -> Result<(RunSummary, GridFunction)> {
    let summary = read_summary(&dir.join(CHECKPOINT_SUMMARY))?;
    let state = read_profile(&dir.join(CHECKPOINT_STATE))?;
    if state.grid().n() != summary.grid_n {
        return Err(Error::Shape(format!(
            "checkpoint state has {} cells but the summary records {}",
            state.grid().n(),
            summary.grid_n
        )));
    }
    Ok((summary, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt15(0.0), "0");
        assert_eq!(fmt15(1.0), "1");
        assert_eq!(fmt15(0.1), "0.1");
        assert_eq!(fmt15(-2.5), "-2.5");
        assert_eq!(fmt15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt15(2.396_280_469_471_184_4), "2.39628046947118");
        assert_eq!(fmt15(1.5e-7), "1.5e-07");
        assert_eq!(fmt15(123_456_789_012_345_680.0), "1.23456789012346e+17");
        assert_eq!(fmt15(0.0001), "0.0001");
        assert_eq!(fmt15(2.5e-5), "2.5e-05");
        assert_eq!(fmt15(1e15), "1e+15");
        assert_eq!(round15(0.1 + 0.2), 0.3);
    }

    #[test]
    fn json_rounding() {
        let mut v = serde_json::json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0], "c": 3});
        round_json(&mut v);
        assert_eq!(v["a"].as_f64().unwrap(), 0.3);
        assert_eq!(v["b"][0].as_f64().unwrap(), 0.333333333333333);
        assert_eq!(v["c"].as_u64().unwrap(), 3);
    }

    #[test]
    fn profile_round_trip() {
        let dir = std::env::temp_dir().join(format!("elasticflow-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.csv");
        let g = UniformGrid::new(10).unwrap();
        let u = GridFunction::from_fn(g, |x| x * (1.0 - x) / 3.0).unwrap();
        write_profile(&path, &u).unwrap();
        let back = read_profile(&path).unwrap();
        assert!(back.sub(&u).unwrap().max_abs() < 1e-15);
        std::fs::write(&path, "x,y\n0,0\n").unwrap();
        assert!(matches!(read_profile(&path), Err(Error::Format(_))));
        std::fs::write(&path, "x,value\n0,0\n0.3,1\n0.5,1\n0.75,1\n1,0\n").unwrap();
        assert!(matches!(read_profile(&path), Err(Error::Shape(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
