//! End-to-end tests of the `makino` binary: exit codes, artifacts and
//! reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use makino_core::fluid::StaticProfile;
use makino_core::grid::dump::{read_file, write_file};
use makino_core::grid::{sample_radial, RadialGrid, Rank};

fn makino(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_makino"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env_remove("MAKINO_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SHORT_RUN: &str = "[grid]\nn = 128\n[scheme]\nt_end = 0.05\n[norms]\njmax = 4\nshell_n = 16\n\
                         [output]\ncsv = out/series.csv\ndump_dir = out/dumps\n";

#[test]
fn simulate_writes_artifacts_and_reruns_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.ini"), SHORT_RUN).unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "run.ini"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("steps "));
    let series = std::fs::read(dir.path().join("out/series.csv")).unwrap();
    let text = String::from_utf8_lossy(&series);
    assert!(text.starts_with("t,mass,"));
    assert_eq!(text.lines().count(), 22, "header plus 21 records");
    let w = read_file(&dir.path().join("out/dumps/w.mkgf")).unwrap();
    assert_eq!(w.samples().len(), 128);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["scheme"]["cadence"], 0.0025);
    assert_eq!(manifest["config"]["eos"]["k_mode"], "static");
    assert_eq!(manifest["grid_hashes"]["w"].as_str().unwrap().len(), 64);

    let o = makino(dir.path(), &["simulate", "--config", "run.ini"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("out/series.csv")).unwrap(), series);

    std::fs::rename(dir.path().join("manifest.json"), dir.path().join("saved.json")).unwrap();
    std::fs::remove_file(dir.path().join("out/series.csv")).unwrap();
    let o = makino(dir.path(), &["simulate", "--manifest", "saved.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(dir.path().join("out/series.csv")).unwrap(), series);
}

#[test]
fn tampered_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.ini"), SHORT_RUN).unwrap();
    assert!(makino(dir.path(), &["simulate", "--config", "run.ini"]).status.success());
    let path = dir.path().join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    m["grid_hashes"]["w"] = "0".repeat(64).into();
    std::fs::write(&path, m.to_string()).unwrap();
    let o = makino(dir.path(), &["simulate", "--manifest", "manifest.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hashes"));
}

#[test]
fn hypothesis_violations_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.ini"), "[eos]\ngamma = 2\nK = 1\n[initial]\nprofile = gaussian\n").unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "bad.ini"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("γ must lie in (1, 5/3)"), "{}", stderr(&o));
    assert!(!dir.path().join("manifest.json").exists());

    std::fs::write(dir.path().join("typo.ini"), "[scheme]\ncfll = 0.3\n").unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "typo.ini"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key [scheme] cfll"));
}

#[test]
fn missing_config_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "absent.ini"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read config"));
}

#[test]
fn invalid_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.ini"), SHORT_RUN).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_makino"))
        .args(["--workdir", dir.path().to_str().unwrap(), "simulate", "--config", "run.ini"])
        .env("MAKINO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MAKINO_THREADS"));
}

#[test]
fn collapse_exits_with_code_three_after_writing_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // w scaled by 3/2 makes the density 1.5^10 times the hydrostatic one
    let cfg = "[initial]\nscale = 1.5\n[grid]\nn = 256\n[scheme]\nt_end = 2\nblowup_factor = 2\n\
               [norms]\nmonitor = false\n";
    std::fs::write(dir.path().join("run.ini"), cfg).unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "run.ini"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("characteristic speed"));
    assert!(dir.path().join("manifest.json").exists());
    let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(series.lines().count() >= 2);
}

#[test]
fn picard_outcomes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[grid]\nn = 128\n[scheme]\nt_end = 0.05\n[norms]\nmonitor = false\n[picard]\nenabled = true\n";
    std::fs::write(dir.path().join("ok.ini"), format!("{base}T = 0.02\n")).unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "ok.ini"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("picard: converged"));
    let trace = std::fs::read_to_string(dir.path().join("series.picard.csv")).unwrap();
    assert!(trace.starts_with("iteration,high_norm,gap\n"));

    std::fs::write(dir.path().join("stuck.ini"), format!("{base}max_iter = 1\ntol = 1e-14\n")).unwrap();
    let o = makino(dir.path(), &["simulate", "--config", "stuck.ini"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("series.picard.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
}

fn plummer_dump(dir: &Path, name: &str, rho: bool) {
    let p = StaticProfile::new(1.0).unwrap();
    let g = RadialGrid::new(64.0, 2048).unwrap();
    let u = sample_radial(g, Rank::Scalar, |r| if rho { p.rho(r) } else { p.w_shape(r) }).unwrap();
    write_file(&u, &dir.join(name)).unwrap();
}

#[test]
fn norm_prints_the_shell_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    plummer_dump(dir.path(), "w.mkgf", false);
    let o = makino(
        dir.path(),
        &["norm", "--field", "w.mkgf", "--s", "1", "--delta", "-1.2", "--jmax", "4", "--shell-n", "16"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "j,contribution,cumulative");
    assert_eq!(lines.len(), 6);
    let last: Vec<f64> = lines[5].split(',').map(|x| x.parse().unwrap()).collect();
    let sum: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((last[2] - sum).abs() <= 1e-12 * sum);
}

#[test]
fn poisson_reproduces_the_plummer_potential() {
    let dir = tempfile::tempdir().unwrap();
    plummer_dump(dir.path(), "rho.mkgf", true);
    let o = makino(dir.path(), &["poisson", "--density", "rho.mkgf", "--out", "fields/phi.mkgf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("residual "));
    let phi = read_file(&dir.path().join("fields/phi.mkgf")).unwrap();
    let grad = read_file(&dir.path().join("fields/phi_grad.mkgf")).unwrap();
    let p = StaticProfile::new(1.0).unwrap();
    let g = *phi.radial_grid().unwrap();
    for (i, v) in phi.samples().iter().enumerate() {
        assert!((v - p.phi(g.node(i))).abs() < 1e-7, "node {i}");
    }
    assert_eq!(grad.rank(), Rank::RadialVector);
}

#[test]
fn check_ineq_emits_csv_and_rejects_bad_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let o = makino(
        dir.path(),
        &["check-ineq", "--kind", "intermediate", "--jmax", "5", "--shell-n", "16"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("id,dilation,lhs,rhs,ratio,truncated\n"));
    assert_eq!(out.lines().count(), 31);

    let o = makino(dir.path(), &["check-ineq", "--kind", "power-mass", "--delta", "-1.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3/[beta] - 3/2 < delta fails"));

    let o = makino(dir.path(), &["check-ineq", "--kind", "nonsense"]);
    assert_eq!(o.status.code(), Some(2), "clap usage errors exit with 2");
}

#[test]
fn check_ineq_reads_a_corpus_directory() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    plummer_dump(&corpus, "plummer.mkgf", false);
    let g = RadialGrid::new(32.0, 1024).unwrap();
    let u = sample_radial(g, Rank::Scalar, |r| (-r * r).exp()).unwrap();
    write_file(&u, &corpus.join("gauss.mkgf")).unwrap();
    let o = makino(
        dir.path(),
        &["check-ineq", "--kind", "intermediate", "--corpus", "corpus", "--jmax", "5", "--shell-n", "16"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 7, "two items at three dilations: {out}");
    assert!(out.lines().nth(1).unwrap().starts_with("gauss"));
}

fn last_order(table: &str) -> f64 {
    table.lines().last().unwrap().split(',').nth(3).unwrap().parse().unwrap()
}

#[test]
fn static_test_tabulates_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = makino(dir.path(), &["static-test", "--resolutions", "512"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("n,drift"));
    assert_eq!(stdout(&o).lines().count(), 2);

    let a1 = makino(dir.path(), &["static-test", "--resolutions", "512,1024,2048"]);
    let a2 = makino(dir.path(), &["static-test", "--a", "2", "--resolutions", "512,1024,2048"]);
    assert!(a1.status.success() && a2.status.success());
    let (o1, o2) = (last_order(&stdout(&a1)), last_order(&stdout(&a2)));
    assert!(o1 >= 2.0 && o2 >= 2.0, "{o1} {o2}");
    assert!((o1 - o2).abs() < 0.25, "{o1} {o2}");
}
