use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use modular_issf::output::{RunManifest, RUNS_HEADER, SUMMARY_HEADER, SWEEP_HEADER, TRAJECTORY_HEADER};

fn issf_sim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_issf-sim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = issf_sim(&["simulate", "--set", "sim.horizon=0.5", "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = dir.path().join("trajectory.csv");
    assert_eq!(first_line(&traj), TRAJECTORY_HEADER);
    assert_eq!(rows(&traj).len(), 501);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("manifest.command = simulate"));
    assert!(manifest.contains("manifest.status = ok"));
    let config = RunManifest::parse_config(&manifest).unwrap();
    assert_eq!(config.seed, 9);
    assert_eq!(config.horizon, 0.5);
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("equilibrium.cfg");
    fs::write(
        &cfg,
        "# start at rest at the origin with the true parameters\n\
         sim.x0 = 0, 0, 0, 0\n\
         sim.theta_hat0 = 0.8, 1.4\n\
         sim.horizon = 5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = issf_sim(
        &["simulate", "--config", cfg.to_str().unwrap(), "--set", "sim.horizon=0.2"],
        &out_dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&out_dir.join("trajectory.csv"));
    assert_eq!(rows.len(), 201);
    for r in &rows {
        for col in &r[1..9] {
            assert_eq!(col.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn montecarlo_writes_two_files_per_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = issf_sim(
        &["montecarlo", "--runs", "2", "--laws", "gd,rls,rls_forget,rls_varforget", "--set", "sim.horizon=0.3"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csvs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 8);
    for law in ["gd", "rls", "rls_forget", "rls_varforget"] {
        let summary = dir.path().join(format!("summary_{law}.csv"));
        let runs = dir.path().join(format!("runs_{law}.csv"));
        assert_eq!(first_line(&summary), SUMMARY_HEADER);
        assert_eq!(first_line(&runs), RUNS_HEADER);
        assert_eq!(rows(&summary).len(), 301);
        let runs = rows(&runs);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0][4], "0");
    }
}

#[test]
fn montecarlo_seeds_match_across_laws() {
    let dir = tempfile::tempdir().unwrap();
    let out = issf_sim(
        &["montecarlo", "--runs", "3", "--laws", "gd,rls_forget", "--set", "sim.horizon=0.2"],
        dir.path(),
    );
    assert!(out.status.success());
    let seeds = |law: &str| -> Vec<String> {
        rows(&dir.path().join(format!("runs_{law}.csv"))).into_iter().map(|r| r[1].clone()).collect()
    };
    assert_eq!(seeds("gd"), seeds("rls_forget"));
}

#[test]
fn strict_sweep_passes_ordering_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = issf_sim(&["sweep", "--strict"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("sweep.csv");
    assert_eq!(first_line(&path), SWEEP_HEADER);
    assert_eq!(rows(&path).len(), 8);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate", "--set", "sim.bogus=1"][..],
        &["simulate", "--set", "sim.dt=-1"][..],
        &["simulate", "--set", "estimator.law=newton"][..],
        &["simulate", "--set", "no-equals-sign"][..],
        &["simulate", "--config", "/nonexistent/run.cfg"][..],
    ] {
        let out = issf_sim(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn infeasible_start_aborts_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = issf_sim(&["simulate", "--set", "sim.x0=-1, 1, 0, 0"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(first_line(&dir.path().join("trajectory.csv")), TRAJECTORY_HEADER);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("manifest.status = aborted"));
}

#[test]
fn strict_monitor_failure_exits_with_code_4() {
    // Without the filter the CLF drives straight through the obstacle. With
    // exact estimates the inflated set equals the safe set, so it is left.
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--set",
        "cbf.enabled=false",
        "--set",
        "sim.theta_hat0=0.8, 1.4",
        "--set",
        "sim.horizon=5",
    ];
    let relaxed = issf_sim(&args, dir.path());
    assert!(relaxed.status.success());
    let mut strict = args.to_vec();
    strict.push("--strict");
    let out = issf_sim(&strict, dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["montecarlo", "--runs", "3", "--seed", "42", "--set", "sim.horizon=0.5"];
    assert!(issf_sim(&args, &a).status.success());
    assert!(issf_sim(&args, &b).status.success());
    for name in ["summary_gd.csv", "runs_gd.csv", "summary_rls_forget.csv", "runs_rls_forget.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sweep_laws_flag_selects_laws() {
    let dir = tempfile::tempdir().unwrap();
    let out = issf_sim(&["sweep", "--laws", "rls", "--set", "sim.horizon=0.2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[0] == "rls"));
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = issf_sim(&["simulate", "--set", "sim.horizon=0.3", "--set", "estimator.law=gd"], &a);
    assert!(first.status.success());
    let manifest = a.join("manifest.txt");
    let second = issf_sim(&["simulate", "--config", manifest.to_str().unwrap()], &b);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());
}
