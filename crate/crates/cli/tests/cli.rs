use std::collections::HashMap;
use std::fs;
use std::process::{Command, Output};

fn rba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rba")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn zero_growth_is_feasible() {
    let out = rba(&["feasible", "--model", "toy_prokaryote", "--mu", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["status"], "feasible");
}

#[test]
fn huge_growth_is_infeasible() {
    let out = rba(&["feasible", "--model", "toy_prokaryote", "--mu", "1e9"]);
    assert_eq!(code(&out), 3);
    assert_eq!(report(&out)["status"], "infeasible");
}

#[test]
fn missing_model_file_is_an_error() {
    let out = rba(&["feasible", "--model", "/nonexistent/model.toml", "--mu", "0"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn feasible_requires_mu() {
    assert_eq!(code(&rba(&["feasible", "--model", "toy_prokaryote"])), 1);
}

#[test]
fn zero_turnover_file_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.toml");
    fs::write(&path, "").unwrap();
    let plain = rba(&["mumax", "--model", "toy_prokaryote"]);
    let zeros = rba(&["mumax", "--model", "toy_prokaryote", "--turnover", path.to_str().unwrap()]);
    assert_eq!(code(&plain), 0);
    assert_eq!(plain.stdout, zeros.stdout);
}

#[test]
fn mumax_reports_bracket_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.csv");
    let out = rba(&["mumax", "--model", "toy_prokaryote", "--profile", profile.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let lo: f64 = r["bracket_lo"].parse().unwrap();
    let hi: f64 = r["bracket_hi"].parse().unwrap();
    assert!(lo > 0.0 && hi - lo <= 1e-8);
    assert_eq!(r["profile_monotone"], "true");
    let text = fs::read_to_string(profile).unwrap();
    assert!(text.starts_with("mu,status\n0.0,feasible"));
    assert!(text.trim_end().ends_with("infeasible"));
}

#[test]
fn eukaryote_flag_needs_a_compartment_section() {
    assert_eq!(code(&rba(&["mumax", "--model", "toy_eukaryote", "--eukaryote"])), 0);
    assert_eq!(code(&rba(&["mumax", "--model", "toy_prokaryote", "--eukaryote"])), 1);
}

#[test]
fn malformed_control_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    fs::write(&path, "t,alpha\n0,0.5\n1,oops\n").unwrap();
    let out = rba(&["simulate", "--instance", "symmetric", "--control", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn dilution_instance_halves_the_pool() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("dilution.toml");
    fs::write(
        &inst,
        "kappa_e = 1.0\nkappa_m = 1.0\ngamma_e = 0.0\ngamma_m = 0.0\nsmoothing = 0.0\n\
         flux = { mode = \"constant\", nu_e = 0.0, nu_m = 0.0 }\ne0 = 1.0\nm0 = 1.0\nt_end = 1.0\ngrid_n = 1\n",
    )
    .unwrap();
    let csv = dir.path().join("traj.csv");
    let out = rba(&[
        "simulate",
        "--instance",
        inst.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--dt",
        "1e-3",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let e: f64 = report(&out)["e_end"].parse().unwrap();
    assert!((e - 0.5).abs() <= 1e-6);
}

#[test]
fn symmetric_constant_split_stays_on_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("diag.toml");
    let text = rba_core::golden::OCP_SYMMETRIC.replace("m0 = 0.6", "m0 = 0.2");
    fs::write(&inst, text).unwrap();
    let out = rba(&["simulate", "--instance", inst.to_str().unwrap(), "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    for line in String::from_utf8_lossy(&out.stdout).lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[1], f[2], "{line}");
    }
}

#[test]
fn simulation_output_is_bit_stable() {
    let a = rba(&["simulate", "--instance", "asymmetric", "--alpha", "0.3"]);
    let b = rba(&["simulate", "--instance", "asymmetric", "--alpha", "0.3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn machinery_rich_start_allocates_to_enzymes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = rba(&["optimize", "--instance", "machinery_rich", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["alpha_initial"], "1");
    assert_eq!(r["converged"], "true");
    let violation: f64 = r["max_condition_violation"].parse().unwrap();
    assert!(violation <= 1e-6);
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("t,E,M,eta_E,eta_M,alpha,H,H1\n"));
}

#[test]
fn grid_refinement_barely_moves_the_cost() {
    let cost = |n: &str| -> f64 {
        let out = rba(&["optimize", "--instance", "asymmetric", "--grid-n", n]);
        assert_eq!(code(&out), 0);
        report(&out)["cost"].parse().unwrap()
    };
    let (coarse, fine) = (cost("50"), cost("100"));
    assert!((coarse - fine).abs() <= 1e-3 * fine.abs(), "{coarse} vs {fine}");
}

#[test]
fn random_models_are_reproducible_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    let a = rba(&["gen-random-model", "--seed", "11", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&a), 0);
    let b = rba(&["gen-random-model", "--seed", "11"]);
    assert_eq!(fs::read(&path).unwrap(), b.stdout);
    let out = rba(&["feasible", "--model", path.to_str().unwrap(), "--mu", "0"]);
    assert_eq!(code(&out), 0);
}
