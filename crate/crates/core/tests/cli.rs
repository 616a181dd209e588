use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn debtgame(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_debtgame"));
    cmd.args(args).env_remove("DEBTGAME_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("DEBTGAME_OUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn conf(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn write_conf(dir: &Path, extra: &str) -> String {
    let base = std::fs::read_to_string(configs().join("benchmark_x20.conf")).unwrap();
    let path = dir.join("run.conf");
    std::fs::write(&path, format!("{base}{extra}\n")).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_writes_boundary_rows() {
    let o = debtgame(&["solve", "-c", &conf("benchmark_x20.conf"), "--mode", "det"], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("# artifact = solution\n"));
    assert!(csv.contains("\nx,V,p,u\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows[0], "0.000000,0.000000,1.000000,0.000000");
    assert_eq!(*rows.last().unwrap(), "20.000000,10.000000,0.250000,0.000000");
}

#[test]
fn full_precision_round_trips() {
    let o = debtgame(&["solve", "-c", &conf("benchmark_x20.conf"), "--precision", "full"], None);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.contains("# output.precision = full"));
    let last = *data_rows(&csv).last().unwrap();
    let vals: Vec<f64> = last.split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(vals, vec![20.0, 10.0, 0.25, 0.0]);
    assert!(last.contains('e'));
}

#[test]
fn out_dir_env_names_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = debtgame(&["envelope", "-c", &conf("stochastic_x100.conf")], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("envelope.csv")).unwrap();
    assert!(csv.contains("\nx,p1,V1,p2,V2\n"));

    // an explicit --out wins over the environment
    let explicit = dir.path().join("nested/env.csv");
    let o = debtgame(
        &["envelope", "-c", &conf("stochastic_x100.conf"), "-o", explicit.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(explicit).unwrap(), csv);
}

#[test]
fn verify_passes_on_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_conf(dir.path(), "sim.n_paths = 200");
    let out = dir.path().join("verify.csv");
    let o = debtgame(&["verify", "-c", &path, "-o", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    let rows = data_rows(&csv);
    // three probes, each with price, cost and two perturbed costs
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.ends_with(",pass")));
}

#[test]
fn classify_reports_interior_optimum() {
    let o = debtgame(&["classify", "-c", &conf("sweep_alpha2.conf")], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("interior_optimum"));
}

#[test]
fn sweep_finds_interior_minimizer() {
    let o = debtgame(&["sweep", "-c", &conf("sweep_alpha2.conf")], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let vals: Vec<f64> = data_rows(&csv).iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 30);
    let (k, _) = vals.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    assert!(k > 0 && k + 1 < vals.len());
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(configs().join("benchmark_x20.conf")).unwrap();

    // mu = r violates the growth condition
    let path = dir.path().join("mu.conf");
    std::fs::write(&path, base.replace("mu = 0.02", "mu = 0.05")).unwrap();
    let o = debtgame(&["solve", "-c", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());

    // recovery above one at the threshold
    let path = dir.path().join("theta.conf");
    std::fs::write(
        &path,
        base.replace(
            "recovery.kind = power_cap\nrecovery.R0 = 5\nrecovery.alpha = 1",
            "recovery.kind = constant\nrecovery.value = 1.2",
        ),
    )
    .unwrap();
    let o = debtgame(&["solve", "-c", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta"));

    let path = write_conf(dir.path(), "sim.dt = oops");
    let o = debtgame(&["simulate", "-c", &path], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 13"));

    assert_eq!(debtgame(&["solve", "-c", "/nonexistent.conf"], None).status.code(), Some(2));
    assert_eq!(debtgame(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn simulate_writes_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_conf(dir.path(), "sim.n_paths = 100");
    let o = debtgame(&["simulate", "-c", &path, "--x0", "15"], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("15.000000,cost,"));
    assert!(rows[1].starts_with("15.000000,price,"));
}
