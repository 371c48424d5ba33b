//! Python module `elasticflow`.

use elasticflow::critical::critical_profile as build_critical;
use elasticflow::discretization;
use elasticflow::flow::{run_flow as run_core_flow, FlowConfig};
use elasticflow::rearrange as rearr;
use elasticflow::{specialfn, validation, GridFunction, Obstacle, UniformGrid};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: elasticflow::Error) -> PyErr {
    if err.is_nonconvergence() {
        PyRuntimeError::new_err(err.to_string())
    } else {
        PyValueError::new_err(err.to_string())
    }
}

fn grid_function(values: Vec<f64>) -> PyResult<GridFunction> {
    if values.len() < 2 {
        return Err(PyValueError::new_err("need at least two nodal values"));
    }
    let grid = UniformGrid::new(values.len() - 1).map_err(to_py)?;
    GridFunction::new(grid, values).map_err(to_py)
}

fn nodes(grid: UniformGrid) -> Vec<f64> {
    (0..grid.nodes()).map(|i| grid.x(i)).collect()
}

/// The constant `c0 = 2 lim G`.
#[pyfunction]
fn c0() -> f64 {
    specialfn::c0()
}

#[pyfunction]
fn g(s: f64) -> PyResult<f64> {
    specialfn::g(s).map_err(to_py)
}

#[pyfunction]
fn g_inv(y: f64) -> PyResult<f64> {
    specialfn::g_inv(y).map_err(to_py)
}

#[pyfunction]
fn h_of_a(a: f64) -> PyResult<f64> {
    specialfn::h_of_A(a).map_err(to_py)
}

#[pyfunction]
fn h_inv(h: f64) -> PyResult<f64> {
    specialfn::h_inv(h).map_err(to_py)
}

#[pyfunction]
fn u_c(c: f64, x: f64) -> PyResult<f64> {
    specialfn::u_c_value(c, x).map_err(to_py)
}

/// Discrete elastic energy of nodal values on the uniform grid.
#[pyfunction]
fn energy(values: Vec<f64>) -> PyResult<f64> {
    discretization::energy(&grid_function(values)?).map_err(to_py)
}

/// `(x, u, u', energy)` of the symmetric critical point over the cone.
#[pyfunction]
fn critical_profile(height: f64, n: usize) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let grid = UniformGrid::new(n).map_err(to_py)?;
    let cp = build_critical(height, grid).map_err(to_py)?;
    Ok((nodes(grid), cp.profile.values().to_vec(), cp.slope_profile.values().to_vec(), cp.energy))
}

/// Flow from `u_c` over the cone; returns `(times, energies, final iterate, first touching step)`.
#[pyfunction]
#[pyo3(signature = (height, c, n, tau=1e-3, t_end=1.0, inner_tol=1e-8))]
fn simulate_cone(
    height: f64,
    c: f64,
    n: usize,
    tau: f64,
    t_end: f64,
    inner_tol: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Option<usize>)> {
    let grid = UniformGrid::new(n).map_err(to_py)?;
    let psi = Obstacle::cone(grid, height).map_err(to_py)?;
    let u0 = GridFunction::u_c(grid, c).map_err(to_py)?;
    let cfg = FlowConfig {
        tau,
        t_end,
        inner_tol,
        ..FlowConfig::default()
    };
    let traj = run_core_flow(&u0, &psi, &cfg).map_err(to_py)?;
    Ok((traj.times.clone(), traj.energies.clone(), traj.last().values().to_vec(), traj.first_touch()))
}

/// `(f_star, f_sym)` of nonnegative nodal values.
#[pyfunction]
fn rearrange(values: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let pair = rearr::rearrange(&grid_function(values)?).map_err(to_py)?;
    Ok((pair.f_star.into_values(), pair.f_sym.into_values()))
}

/// Runs the acceptance suite and returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (quick=true, seed=validation::DEFAULT_SEED))]
fn validate(quick: bool, seed: u64) -> PyResult<String> {
    let report = validation::run_all(seed, quick);
    elasticflow::io::to_json_string(&report).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "elasticflow")]
fn elasticflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(c0, m)?)?;
    m.add_function(wrap_pyfunction!(g, m)?)?;
    m.add_function(wrap_pyfunction!(g_inv, m)?)?;
    m.add_function(wrap_pyfunction!(h_of_a, m)?)?;
    m.add_function(wrap_pyfunction!(h_inv, m)?)?;
    m.add_function(wrap_pyfunction!(u_c, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(critical_profile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_cone, m)?)?;
    m.add_function(wrap_pyfunction!(rearrange, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add("THRESHOLD_EXISTENCE", specialfn::existence_threshold())?;
    m.add("THRESHOLD_MINIMALITY", specialfn::minimality_threshold())?;
    m.add("THRESHOLD_TOUCHING", specialfn::touching_threshold())?;
    Ok(())
}
