use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = r#"{"grid_n": 200, "tau": 1e-3, "t_end": 1,
  "obstacle": {"type": "cone", "height": 0.02}, "initial": {"type": "uc", "c": 0.5},
  "outputs": {"snapshots": [0.5], "plot_svg": "flow.svg"}}"#;

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elasticflow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn simulate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), MINIMAL).unwrap();
    let out = bin(&["simulate", "--config", "run.json", "--out", "a"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("L0 = Ginv(sqrt(E0))^2"));

    let csv = std::fs::read_to_string(dir.path().join("a/trajectory.csv")).unwrap();
    assert!(csv.starts_with(
        "step,time,energy,step_l2,coincidence_count,symmetry_residual,inner_iters,kkt_stationarity,kkt_multiplier_min\n"
    ));
    let energy = column(&csv, "energy");
    assert_eq!(energy.len(), 1000);
    assert!(energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    for key in ["final_energy", "dissipation_lhs", "dissipation_rhs", "touched_at_step", "l0_window", "warnings"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert!(summary["dissipation_lhs"].as_f64().unwrap() <= summary["dissipation_rhs"].as_f64().unwrap());
    let snapshot = std::fs::read_to_string(dir.path().join("a/snapshot_t0.5.csv")).unwrap();
    assert!(snapshot.starts_with("x,u,psi,gap\n"));
    assert!(column(&snapshot, "gap").iter().all(|&g| g >= 0.0));

    let again = bin(&["simulate", "--config", "run.json", "--out", "b"], dir.path());
    assert_eq!(code(&again), 0);
    for file in ["trajectory.csv", "summary.json", "checks.json", "final_state.csv", "snapshot_t0.5.csv", "flow.svg"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn resume_continues_the_step_numbering() {
    let dir = tempfile::tempdir().unwrap();
    let short = MINIMAL.replace("\"t_end\": 1", "\"t_end\": 0.2").replace("[0.5]", "[]");
    std::fs::write(dir.path().join("short.json"), &short).unwrap();
    std::fs::write(dir.path().join("long.json"), short.replace("0.2", "0.3")).unwrap();
    assert_eq!(code(&bin(&["simulate", "--config", "short.json", "--out", "r"], dir.path())), 0);
    let resumed = bin(&["simulate", "--config", "long.json", "--out", "r", "--resume"], dir.path());
    assert_eq!(code(&resumed), 0, "{}", String::from_utf8_lossy(&resumed.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r/trajectory.csv")).unwrap();
    let steps = column(&csv, "step");
    assert_eq!(steps.len(), 300);
    assert!(steps.iter().enumerate().all(|(k, &s)| s == (k + 1) as f64));
    let times = column(&csv, "time");
    assert!((times[299] - 0.3).abs() < 1e-12);
    let again = bin(&["simulate", "--config", "long.json", "--out", "r", "--resume"], dir.path());
    assert_eq!(code(&again), 2);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("typo.json"), MINIMAL.replace("\"tau\"", "\"tua\"")).unwrap();
    let out = bin(&["simulate", "--config", "typo.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("tua"));

    std::fs::write(
        dir.path().join("flat.json"),
        r#"{"grid_n": 32, "obstacle": {"type": "constant", "level": 0}, "initial": {"type": "scaled_bump", "scale": 0.1}}"#,
    )
    .unwrap();
    let out = bin(&["simulate", "--config", "flat.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Assumption 1"));
    let out = bin(&["simulate", "--config", "flat.json", "--allow-invalid-obstacle"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(code(&bin(&["simulate"], dir.path())), 2);
}

#[test]
fn nonconvergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = MINIMAL
        .replace("\"t_end\": 1", "\"t_end\": 0.01, \"inner_max_iter\": 1, \"solver\": \"projected_gradient\"")
        .replace("[0.5]", "[]");
    std::fs::write(dir.path().join("run.json"), cfg).unwrap();
    let out = bin(&["simulate", "--config", "run.json"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn critical_profile_hits_the_apex() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["critical", "--height", "0.05", "--n", "400", "--out", "c", "--plot"], dir.path());
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("c/critical.csv")).unwrap();
    assert!(csv.starts_with("x,u,uprime,psi\n"));
    let u = column(&csv, "u");
    assert_eq!(u.len(), 401);
    assert!((u[200] - 0.05).abs() <= 1e-9);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c/critical.json")).unwrap()).unwrap();
    assert!(json["residuals"]["round_trip"].as_f64().unwrap() < 1e-10);
    assert!(dir.path().join("c/critical.svg").exists());
}

#[test]
fn specialfn_prints_one_value_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["specialfn", "eval", "--fn", "g", "--args", "0", "1", "-1"], dir.path());
    assert_eq!(code(&out), 0);
    let lines: Vec<f64> = String::from_utf8_lossy(&out.stdout).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], 0.0);
    assert_eq!(lines[1], -lines[2]);
    let out = bin(&["specialfn", "eval", "--fn", "c0"], dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2.39628046947118");
    let out = bin(&["specialfn", "eval", "--fn", "uc", "--args", "0.5", "0.5"], dir.path());
    let peak: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(peak > 0.0);
    assert_eq!(code(&bin(&["specialfn", "eval", "--fn", "ginv", "--args", "5"], dir.path())), 2);
}

#[test]
fn rearrange_writes_all_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,value\n");
    for i in 0..=20 {
        let x = i as f64 / 20.0;
        text.push_str(&format!("{x},{}\n", (3.0 * x).sin().abs()));
    }
    std::fs::write(dir.path().join("f.csv"), text).unwrap();
    let out = bin(&["rearrange", "--input", "f.csv", "--out", "pair.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("pair.csv")).unwrap();
    assert!(csv.starts_with("x,f,f_star,f_sym,v\n"));
    let star = column(&csv, "f_star");
    assert!(star.windows(2).all(|w| w[0] >= w[1]));
    let v = column(&csv, "v");
    assert!((v[0]).abs() < 1e-15 && v[10] > 0.0);
}

#[test]
fn sweep_runs_each_case_in_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = MINIMAL.replace("\"t_end\": 1", "\"t_end\": 0.05").replace("[0.5]", "[]");
    std::fs::write(dir.path().join("run.json"), cfg).unwrap();
    let out = bin(
        &["sweep", "--config", "run.json", "--out", "s", "--param", "c", "--values", "0.4,0.5"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s/sweep.json")).unwrap()).unwrap();
    assert_eq!(index.as_array().unwrap().len(), 2);
    assert!(dir.path().join("s/case_000/trajectory.csv").exists());
    assert!(dir.path().join("s/case_001/trajectory.csv").exists());
}

#[test]
fn validate_quick_lists_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["validate", "--quick", "--out", "v"], dir.path());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v/validation_report.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let ids: Vec<u64> = checks.iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=12).collect::<Vec<u64>>());
    let pass = report["pass"].as_bool().unwrap();
    assert_eq!(pass, checks.iter().all(|c| c["status"] == "pass"));
    assert_eq!(code(&out), if pass { 0 } else { 1 });
    assert_eq!(report["rng"], "ChaCha8Rng");
}
