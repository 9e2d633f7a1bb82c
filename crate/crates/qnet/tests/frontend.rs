mod common;

use common::*;

fn path(name: &str) -> String {
    network_path(name).to_string_lossy().into_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let head = lines.next().unwrap().split(',').map(str::to_string).collect();
    (head, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn complex_cell(cell: &str) -> qnet::C64 {
    let (re, im) = cell.split_once(':').unwrap();
    c(re.parse().unwrap(), im.parse().unwrap())
}

#[test]
fn corpus_round_trips() {
    round_trip_corpus().assert();
}

#[test]
fn compose_matches_golden() {
    golden_compose().assert();
}

#[test]
fn malformed_inputs_are_positioned() {
    malformed_diagnostics().assert();
}

#[test]
fn driven_cavity_reaches_mean_field() {
    let out = run_cli(&[
        "simulate",
        &path("driven_cavity.qnet"),
        "--drive",
        "coherent(1)",
        "--t-end",
        "30",
        "--samples",
        "30",
        "--observables",
        "cav.a",
        "--atol",
        "1e-12",
        "--rtol",
        "1e-10",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["t", "cav.a"]);
    let a = complex_cell(&rows.last().unwrap()[1]);
    let want = -(2f64.sqrt()) / c(1.0, 0.5);
    assert!((a - want).norm() < 1e-6, "{a} vs {want}");
}

#[test]
fn vacuum_leaves_columns_constant() {
    let out = run_cli(&["simulate", &path("driven_cavity.qnet"), "--t-end", "5", "--samples", "10", "--observables", "cav.n,trace"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let (_, rows) = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(r[1..], rows[0][1..]);
    }
}

#[test]
fn single_photon_flux_integrates_to_one() {
    let out = run_cli(&[
        "simulate",
        &path("tla_single_photon.qnet"),
        "--drive",
        "fock(1)",
        "--pulse",
        "gaussian(15,3)",
        "--t-end",
        "36",
        "--samples",
        "36",
        "--observables",
        "emitted,flux[1]",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let (_, rows) = csv_rows(&out.stdout);
    let total: f64 = rows.last().unwrap()[1].parse().unwrap();
    assert!((total - 1.0).abs() < 1e-4, "{total}");
}

#[test]
fn fixed_step_output_is_deterministic() {
    let args = [
        "simulate",
        &path("jc_cavity.qnet"),
        "--drive",
        "coherent(0.5)",
        "--t-end",
        "2",
        "--samples",
        "20",
        "--fixed-step",
        "0.005",
        "--guard",
        "off",
        "--observables",
        "jc.a.n,jc.q.sz",
    ];
    let a = run_cli(&args);
    let b = run_cli(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_adds_parameter_column() {
    let out = run_cli(&[
        "simulate",
        &path("kerr_sweep.qnet"),
        "--drive",
        "coherent(0.5)",
        "--t-end",
        "2",
        "--samples",
        "4",
        "--observables",
        "k.n",
        "--sweep",
        "chi=0:0.4:3",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["chi", "t", "k.n"]);
    assert_eq!(rows.len(), 15);
    let chis: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!((chis[0], chis[5], chis[10]), (0.0, 0.2, 0.4));
}

#[test]
fn set_overrides_param() {
    let a = run_cli(&["compose", &path("two_cavity_cascade.qnet")]);
    let b = run_cli(&["compose", &path("two_cavity_cascade.qnet"), "--set", "gamma1=1.0"]);
    let c = run_cli(&["compose", &path("two_cavity_cascade.qnet"), "--set", "gamma1=3.0"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(run_cli(&["compose", &path("two_cavity_cascade.qnet"), "--set", "nope=1"]).code, 3);
}

#[test]
fn emit_ast_is_json() {
    let out = run_cli(&["compose", &path("vec_elim.qnet"), "--emit", "ast"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(v.to_string().contains("tla_waveguide"));
}

#[test]
fn elaboration_errors_exit_three() {
    let dir = std::env::temp_dir().join(format!("qnet-elab-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.qnet");
    std::fs::write(&p, "component x = one_sided_cavity(gamma=-1.0, delta=0.0, trunc=3);\n").unwrap();
    let out = run_cli(&["compose", p.to_str().unwrap()]);
    std::fs::write(&p, "component x = warp_drive(gamma=1.0);\n").unwrap();
    let unknown = run_cli(&["compose", p.to_str().unwrap()]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(out.code, 3, "{}", out.stderr);
    assert!(out.stderr.contains("gamma >= 0"));
    // unknown kinds are caught while parsing
    assert_eq!(unknown.code, 2);
    assert!(unknown.stderr.contains("1:15: unknown kind 'warp_drive'"));
}

#[test]
fn version_and_usage() {
    let v = run_cli(&["--version"]);
    assert_eq!(v.code, 0);
    assert!(v.stdout.contains("qnet-slh/1"));
    assert_eq!(run_cli(&["simulate"]).code, 2);
}

#[test]
fn check_reports_invariants() {
    let out = run_cli(&["check", &path("opo_feedback.qnet")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("invariants: pass"));
    assert!(out.stdout.contains("Active"), "{}", out.stdout);
}

#[test]
fn steady_state_command() {
    let out = run_cli(&["steady-state", &path("driven_cavity.qnet"), "--drive", "coherent(1)", "--observables", "cav.a"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["observable", "re", "im"]);
    let a = c(rows[0][1].parse().unwrap(), rows[0][2].parse().unwrap());
    assert!((a - -(2f64.sqrt()) / c(1.0, 0.5)).norm() < 1e-8);
}

#[test]
fn transfer_function_command() {
    let out = run_cli(&["transfer-function", &path("driven_cavity.qnet"), "--omega", "-1:1:5"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["omega", "re", "im"]);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let w: f64 = r[0].parse().unwrap();
        let xi = c(r[1].parse().unwrap(), r[2].parse().unwrap());
        let s = c(0.0, w);
        let want = (s + c(-1.0, 0.5)) / (s + c(1.0, 0.5));
        assert!((xi - want).norm() < 1e-10, "{w}: {xi}");
    }
}

#[test]
fn eliminate_command_emits_triple() {
    let out = run_cli(&["eliminate", &path("jc_cavity.qnet"), "--p0", "jc.a=0,jc.q=0"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let g = qnet::slh::SlhTriple::from_json_str(&out.stdout).unwrap();
    assert_eq!(g.ports(), ["probe", "loss"]);
    assert!(g.h().is_zero(1e-10));
}
