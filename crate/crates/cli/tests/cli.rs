use std::f64::consts::{FRAC_PI_3, PI};
use std::path::PathBuf;
use std::process::{Command as Proc, Output};

use efw_cli::commands;
use efw_cli::config::{Command, ExperimentConfig, StateKind};
use efw_core::dynamics::{couplings, first_crossing, integrate, EvolveOptions};
use efw_core::field::moments;
use efw_core::geometry::{Direction, DirectionGrid};
use efw_core::ode::OdeOptions;
use efw_core::qstate::{antisymmetric_state, three_atom_state, QuantumState};
use efw_core::witness::{spin_squeezing_report, witness_report};

fn efw(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Proc::new(env!("CARGO_BIN_EXE_efw"));
    cmd.args(args).env_remove("EFW_WORKERS");
    if let Some(w) = workers {
        cmd.env("EFW_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn perpendicular_direction_is_spin_squeezing() {
    let mut cfg = ExperimentConfig::defaults_for(Command::Fig1Sphere);
    cfg.directions.grid = DirectionGrid::Sphere { n_theta: 1, n_phi: 1 };
    let out = commands::fig1_sphere(&cfg).unwrap();
    assert_eq!(out.reports.len(), 1);
    let atoms = commands::atom_config(&cfg.geometry).unwrap();
    let want = spin_squeezing_report(&three_atom_state(FRAC_PI_3).unwrap(), &atoms).unwrap();
    let got = out.reports[0];
    for ((_, a), (_, b)) in got.values().iter().zip(want.values().iter()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn two_atom_tent_matches_exact_dynamics() {
    let mut cfg = ExperimentConfig::defaults_for(Command::CumulantTent);
    cfg.tent.n = vec![2];
    cfg.tent.kd = vec![0.3];
    cfg.integrator.rtol = 1e-10;
    cfg.integrator.atol = 1e-12;
    let cell = commands::cumulant_tent(&cfg).unwrap()[0];
    let t_cumulant = cell.t_ent.expect("pair is detected");

    let mut g = cfg.geometry.clone();
    g.n = 2;
    g.spacing = 0.3;
    let atoms = commands::atom_config(&g).unwrap();
    let c = couplings(&atoms, cfg.convention).unwrap();
    let times = cfg.integrator.times().unwrap();
    let opts =
        EvolveOptions { ode: OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() }, positivity_floor: None };
    let traj = integrate(&antisymmetric_state(2).unwrap().to_density(), &c, &times, &opts).unwrap();
    let dir = Direction::in_plane(cfg.tent.theta_over_pi * PI);
    let w: Vec<f64> =
        traj.states.iter().map(|rho| witness_report(&moments(rho, &atoms, &dir).unwrap()).w_min).collect();
    let t_exact = first_crossing(&times, &w, -commands::epsilon(&cfg.witness, 2)).expect("exact run detects");
    assert!((t_cumulant / t_exact - 1.0).abs() < 1e-3, "cumulant {t_cumulant} vs exact {t_exact}");
}

#[test]
fn tent_rejects_non_product_states() {
    let mut cfg = ExperimentConfig::defaults_for(Command::CumulantTent);
    cfg.state.kind = StateKind::Mixed;
    assert!(commands::cumulant_tent(&cfg).is_err());
}

#[test]
fn unknown_key_exits_with_config_code() {
    let out = efw(&["decay", "--set", "geometry.nn=3"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nn"));
}

#[test]
fn three_atom_state_needs_three_atoms() {
    let out = efw(&["fig1-sphere", "--set", "geometry.n=4"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn print_config_shows_resolved_values() {
    let path = scratch("cfg.json");
    std::fs::write(&path, r#"{"geometry": {"n": 5}, "integrator": {"t_max": 2.5}}"#).unwrap();
    let out = efw(&["decay", "-c", path.to_str().unwrap(), "--set", "integrator.samples=7", "--print-config"], None);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["geometry"]["n"], 5);
    assert_eq!(v["integrator"]["t_max"], 2.5);
    assert_eq!(v["integrator"]["samples"], 7);
    assert_eq!(v["state"]["kind"], "excited");
}

#[test]
fn decay_writes_csv_and_plot() {
    let (csv, svg) = (scratch("decay.csv"), scratch("decay.svg"));
    let out = efw(
        &[
            "decay",
            "--set",
            "geometry.n=3",
            "--set",
            "integrator.t_max=0.5",
            "--set",
            "integrator.samples=6",
            "-o",
            csv.to_str().unwrap(),
            "--plot",
            svg.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# efw decay\n"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,W_min_over_dirs,theta_argmin,C_glob,trace_drift,min_eig");
    assert_eq!(lines.len(), 7);
    assert!(text.contains("# t_ent: "));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
}

#[test]
fn fuzz_reports_json_and_has_no_plot() {
    let out = efw(&["fuzz", "--set", "fuzz.trials=50"], None);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "fuzz");
    assert_eq!(v["report"]["violations"], 0);
    let plot = scratch("fuzz.svg");
    let out = efw(&["fuzz", "--set", "fuzz.trials=5", "--plot", plot.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let args = ["fig1-sphere", "--set", "directions.grid={\"kind\":\"sphere\",\"n_theta\":8,\"n_phi\":16}"];
    let one = efw(&args, Some("1"));
    let four = efw(&args, Some("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);

    let tent = ["cumulant-tent", "--set", "tent.n=[2,4]", "--set", "tent.kd=[0.3,0.5]", "--workers", "3"];
    let a = efw(&tent, None);
    let b = efw(&tent, Some("1"));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(data_lines(&String::from_utf8_lossy(&a.stdout)).len(), 5);
}

#[test]
fn zero_workers_is_rejected() {
    assert_eq!(efw(&["fuzz", "--set", "fuzz.trials=1"], Some("0")).status.code(), Some(2));
}
