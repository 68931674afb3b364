use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fsicost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsicost")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn replay_passes_on_every_shipped_table() {
    let factors = root().join("data/regression_summary.csv");
    for study in ["cavity_fe_fe", "cavity_fv_fe", "tube_fe_fe", "tube_fv_fe"] {
        let table = root().join(format!("data/{study}.csv"));
        let o = fsicost(&["replay", path(&table), path(&factors)]);
        assert_eq!(o.status.code(), Some(0), "{study}: {}", stdout(&o));
        assert!(stdout(&o).contains("-> PASS"));
    }
}

#[test]
fn replay_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(root().join("data/tube_fe_fe.csv")).unwrap();
    let bad = text.replace("1,1,0.79,", "1,1,0.84,");
    assert_ne!(bad, text);
    let table = dir.path().join("t.csv");
    std::fs::write(&table, bad).unwrap();
    let o = fsicost(&["replay", path(&table), path(&root().join("data/regression_summary.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("offending cell (1, 1)"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(fsicost(&[]).status.code(), Some(2));
    assert_eq!(fsicost(&["run"]).status.code(), Some(2));
    assert_eq!(fsicost(&["contour", "x.csv", "N_q"]).status.code(), Some(2));
    assert_eq!(fsicost(&["sweep", "--config", "a", "--out", "b", "--workers", "many"]).status.code(), Some(2));
}

#[test]
fn missing_files_are_errors() {
    let o = fsicost(&["run", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.cfg"));
}

#[test]
fn run_writes_per_step_counters() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsicost(&["run", "--config", path(&root().join("configs/linear_toy.cfg")), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.starts_with("step,converged,N_c,N_f,N_s"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn diverging_run_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(
        &cfg,
        "model = linear_toy\ntoy_preset = unstable\naccel = constant\nomega0 = 1\neps_f = 1e-8\neps_s = 1e-8\n",
    )
    .unwrap();
    let o = fsicost(&["run", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not converged"));
}

#[test]
fn sweep_fit_and_contour_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    std::fs::write(
        &cfg,
        "model = linear_toy\ntoy_dim_f = 6\ntoy_dim_s = 4\nsteps = 4\neps_f = 1e-12\neps_s = 1e-12\n\
         grid_f = 1, 2, inf\ngrid_s = 1, inf\ntimings = off\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let mut csvs = Vec::new();
    for w in ["1", "3"] {
        let o = fsicost(&["sweep", "--config", path(&cfg), "--out", path(&out), "--workers", w]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        csvs.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let sweep = out.join("sweep.csv");

    let o = fsicost(&["contour", path(&sweep), "teq_norm", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let grid = std::fs::read_to_string(out.join("contour_teq_norm.csv")).unwrap();
    assert_eq!(grid.lines().count(), 4);
    assert!(grid.lines().next().unwrap() == "nmax_f/nmax_s,1,inf");
    assert!(grid.lines().last().unwrap().ends_with(",1.0"));

    // zero timings cannot be fitted
    let o = fsicost(&["fit", path(&sweep)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_recovers_factors_from_timed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let (cf, ff, fi, sf, si) = (0.05, 0.9, 0.07, 0.03, 0.2);
    let mut text = String::from("nmax_f,nmax_s,converged,N_c,N_f,N_s,T_f,T_s,T_c,teq,teq_norm,max_dev_vs_reference\n");
    for (i, (c, f, s)) in
        [(100, 300, 200), (120, 250, 400), (90, 500, 210), (200, 200, 200), (150, 450, 330)].into_iter().enumerate()
    {
        let (c_, f_, s_) = (c as f64, f as f64, s as f64);
        text.push_str(&format!(
            "{},inf,true,{c},{f},{s},{:?},{:?},{:?},,,\n",
            i + 1,
            c_ * ff + f_ * fi,
            c_ * sf + s_ * si,
            c_ * cf
        ));
    }
    std::fs::write(&sweep, text).unwrap();
    let o = fsicost(&["fit", path(&sweep)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1).unwrap(), "0.9000,0.07000,0.03000,0.2000,0.05000,0.9800,0.00,0.00");

    let a = fsicost(&["fit", path(&sweep), "--noise", "0.01", "--seed", "3"]);
    let b = fsicost(&["fit", path(&sweep), "--noise", "0.01", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(stdout(&a), out);
}
