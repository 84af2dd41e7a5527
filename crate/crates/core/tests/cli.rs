use std::path::{Path, PathBuf};

use falva::cli::{run, sweep_rows, ProblemFile, Table};
use serde_json::Value;
use tempfile::TempDir;

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn falva(args: &[&str]) -> i32 {
    run(std::iter::once("falva").chain(args.iter().copied()))
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_table(path: &Path) -> Table {
    Table::from_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const FREE_CLASSICAL: &str = r#"
kind = "variational"
alpha = 1.0
t = 1.0
m = 1
state_dim = 1
lagrangian = "0.5*q0d1^2"
initial = [[0.0]]

[boundary]
mode = "initial_jet"
initial_higher = [[1.0]]
"#;

#[test]
fn solve_then_check_free_particle() {
    let dir = TempDir::new().unwrap();
    let problem = problems().join("free_particle.toml");
    let out = dir.path().join("out");
    assert_eq!(falva(&["solve", "--problem", problem.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);

    let table = read_table(&out.join("trajectory.csv"));
    assert_eq!(table.rows.len(), 201);
    let (th, qd) = (table.column("theta").unwrap(), table.column("q0d1").unwrap());
    let err = table.rows.iter().map(|r| (r[qd] - (1.0 - r[th]).sqrt()).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");

    let report = read_json(&out.join("report.json"));
    for key in ["config", "nodes", "el_residual", "dr_residual", "identity_gap", "norms", "converged", "iterations"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["config"]["solver"]["newton_tol"], 1e-10);
    assert_eq!(report["converged"], true);
    assert!(read_json(&out.join("result.json"))["action_value"].is_number());

    let csv = out.join("trajectory.csv");
    let checked = dir.path().join("checked");
    let code = falva(&[
        "check",
        "--problem",
        problem.to_str().unwrap(),
        "--trajectory",
        csv.to_str().unwrap(),
        "--out",
        checked.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report = read_json(&checked.join("report.json"));
    assert!(report["norms"]["identity_sup"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn perturbed_csv_fails_check() {
    let dir = TempDir::new().unwrap();
    let problem = write(&dir, "p.toml", FREE_CLASSICAL);
    let rows: String = (0..=50)
        .map(|k| {
            let th = k as f64 / 50.0 * 0.999;
            format!("{th},{},{},{}\n", th + 0.1 * th * th, 1.0 + 0.2 * th, 0.2)
        })
        .collect();
    let csv = write(&dir, "t.csv", &format!("theta,q0,q0d1,q0d2\n{rows}"));
    let out = dir.path().join("r");
    let code = falva(&["check", "--problem", &problem, "--trajectory", &csv, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    let report = read_json(&out.join("report.json"));
    assert!(report["norms"]["sup"].as_f64().unwrap() > 1e-2);
    // the identities hold whether or not the curve is stationary
    assert!(report["norms"]["identity_sup"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn classical_file_gives_straight_line() {
    let dir = TempDir::new().unwrap();
    let problem = write(&dir, "p.toml", FREE_CLASSICAL);
    let out = dir.path().join("o");
    assert_eq!(falva(&["solve", "--problem", &problem, "--out", out.to_str().unwrap(), "--grid", "11"]), 0);
    let table = read_table(&out.join("trajectory.csv"));
    assert_eq!(table.rows.len(), 11);
    for r in &table.rows {
        assert!((r[1] - r[0]).abs() < 1e-12);
    }
}

#[test]
fn lq_control_solve_writes_extremal() {
    let dir = TempDir::new().unwrap();
    let problem = problems().join("lq_control.toml");
    let out = dir.path().join("o");
    assert_eq!(falva(&["solve", "--problem", problem.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let table = read_table(&out.join("extremal.csv"));
    assert!(table.column("H").is_some() && table.column("dH_dtheta").is_some());
    let report = read_json(&out.join("report.json"));
    assert!(report["max_pontryagin_gap"].as_f64().unwrap() <= 1e-6);
    assert!(report["max_energy_gap"].as_f64().unwrap() <= 1e-6);

    let checked = dir.path().join("c");
    let code = falva(&[
        "check",
        "--problem",
        problem.to_str().unwrap(),
        "--trajectory",
        out.join("extremal.csv").to_str().unwrap(),
        "--out",
        checked.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
}

#[test]
fn sweep_matches_closed_form_endpoints() {
    let file = ProblemFile::from_toml(&std::fs::read_to_string(problems().join("free_particle.toml")).unwrap()).unwrap();
    let alphas = [0.25, 0.5, 0.75, 1.0];
    let rows = sweep_rows(&file, &alphas).unwrap();
    assert_eq!(rows.len(), 4);
    let mut last = f64::NEG_INFINITY;
    for row in &rows {
        assert!(row.error.is_none(), "{:?}", row.error);
        // q' = (1−θ)^(1−α), q(0) = 0; the classical run extends to θ = t
        let theta_f: f64 = if row.alpha == 1.0 { 1.0 } else { 0.999 };
        let exact = (1.0 - (1.0 - theta_f).powf(2.0 - row.alpha)) / (2.0 - row.alpha);
        assert!((row.endpoint[0] - exact).abs() < 1e-6, "alpha {}: {} vs {exact}", row.alpha, row.endpoint[0]);
        assert!(row.endpoint[0] > last);
        last = row.endpoint[0];
    }
    let classical = rows.last().unwrap();
    assert!((classical.endpoint[0] - 1.0).abs() < 1e-12);
    assert!(classical.sup_d_hamiltonian_dtheta < 1e-9);
    assert!(rows[1].sup_d_hamiltonian_dtheta > 1e-6);
    assert!(sweep_rows(&file, &[]).is_err());
}

#[test]
fn sweep_command_writes_csv() {
    let dir = TempDir::new().unwrap();
    let problem = problems().join("higher_order.toml");
    let out = dir.path().join("s");
    let code =
        falva(&["sweep", "--problem", problem.to_str().unwrap(), "--alpha-list", "0.5,1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("alpha,action,endpoint_q0,sup_dH_dtheta,converged,error"));
}

#[test]
fn derive_and_identities_commands() {
    let problem = problems().join("higher_order.toml");
    assert_eq!(falva(&["derive", "--problem", problem.to_str().unwrap()]), 0);
    assert_eq!(falva(&["identities", "--problem", problem.to_str().unwrap()]), 0);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(falva(&["solve", "--problem", "/nonexistent/p.toml"]), 2);
    let bad = write(&dir, "bad.toml", &FREE_CLASSICAL.replace("alpha = 1.0", "alpha = 2.0"));
    assert_eq!(falva(&["derive", "--problem", &bad]), 2);
    let unknown = write(&dir, "u.toml", &format!("{FREE_CLASSICAL}\n[solver]\nspeed = 3\n"));
    assert_eq!(falva(&["derive", "--problem", &unknown]), 2);
    let problem = write(&dir, "p.toml", FREE_CLASSICAL);
    let csv = write(&dir, "t.csv", "time,q0\n0,1\n");
    assert_eq!(falva(&["check", "--problem", &problem, "--trajectory", &csv]), 2);
    assert_eq!(falva(&["sweep", "--problem", &problem, "--alpha-list", "0.5,1.5"]), 2);
    assert_eq!(falva(&["frobnicate"]), 2);
}

#[test]
fn non_convergence_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let text = FREE_CLASSICAL
        .replace("alpha = 1.0", "alpha = 0.5")
        .replace("0.5*q0d1^2", "0.5*q0d1^2 + cos(3*q0)")
        .replace("mode = \"initial_jet\"\ninitial_higher = [[1.0]]", "mode = \"fixed_ends\"\nfinal = [[4.0]]")
        + "\n[solver]\nmax_iters = 1\n";
    let problem = write(&dir, "p.toml", &text);
    let out = dir.path().join("o");
    assert_eq!(falva(&["solve", "--problem", &problem, "--out", out.to_str().unwrap()]), 3);
}
