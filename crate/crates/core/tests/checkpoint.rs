use elasticflow::flow::{run_flow, run_flow_from, FlowConfig, StopRule};
use elasticflow::io::{read_checkpoint, write_checkpoint, RunSummary};
use elasticflow::{GridFunction, Obstacle, UniformGrid};

fn scratch_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("elasticflow-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn split_run_matches_a_single_run() {
    let grid = UniformGrid::new(100).unwrap();
    let psi = Obstacle::cone(grid, 0.02).unwrap();
    let u0 = GridFunction::u_c(grid, 0.5).unwrap();
    let half = FlowConfig {
        tau: 1e-3,
        t_end: 0.05,
        ..FlowConfig::default()
    };
    let full = FlowConfig { t_end: 0.1, ..half.clone() };

    let first = run_flow(&u0, &psi, &half).unwrap();
    let dir = scratch_dir("checkpoint");
    write_checkpoint(&dir, &RunSummary::from_trajectory(&first, None), first.last()).unwrap();
    let (summary, state) = read_checkpoint(&dir).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(summary.steps, 50);

    let second = run_flow_from(&state, &psi, &half, summary.t_final, StopRule::Horizon).unwrap();
    let whole = run_flow(&u0, &psi, &full).unwrap();
    let diff = second
        .last()
        .values()
        .iter()
        .zip(whole.last().values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10, "split and single runs differ by {diff:e}");

    let merged = RunSummary::resumed(&summary, &second, None);
    let single = RunSummary::from_trajectory(&whole, None);
    assert_eq!(merged.steps, single.steps);
    assert!((merged.t_final - single.t_final).abs() < 1e-12);
    assert!((merged.final_energy - single.final_energy).abs() < 1e-9);
    assert!(merged.dissipation_lhs <= merged.dissipation_rhs);
}

#[test]
fn missing_checkpoint_is_an_error() {
    let dir = scratch_dir("missing");
    assert!(read_checkpoint(&dir).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}
