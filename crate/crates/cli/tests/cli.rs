use std::path::Path;
use std::process::{Command, Output};

fn masolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_masolve")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_prints_a_report_row() {
    let out = masolve(&["run", "--case", "test3", "--N", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,error,order,objective,residual,status,iters,seconds"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[5], "optimal");
    assert!(row[1].parse::<f64>().unwrap() < 1e-6);
}

#[test]
fn unknown_case_is_a_usage_error() {
    let out = masolve(&["run", "--case", "test9", "--N", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown test case"));
}

#[test]
fn bad_arguments_exit_with_one_and_help_with_zero() {
    assert_eq!(masolve(&["run", "--case", "test1"]).status.code(), Some(1));
    assert_eq!(masolve(&["run", "--case", "test1", "--N", "8", "--stencil-width", "3"]).status.code(), Some(1));
    assert_eq!(masolve(&["--help"]).status.code(), Some(0));
}

#[test]
fn iteration_limit_exits_with_two() {
    let out = masolve(&["run", "--case", "test1", "--N", "8", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("iteration-limit"));
}

#[test]
fn sweep_writes_json_with_orders() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let out = masolve(&[
        "sweep", "--case", "test1", "--N", "4,8", "--scheme", "monotone", "--format", "json", "--out", p(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"scheme\": \"monotone\""));
    assert!(text.contains("\"residual\""));
    assert_eq!(text.matches("\"status\": \"optimal\"").count(), 2);
}

#[test]
fn run_dumps_program_and_surface() {
    let dir = tempfile::tempdir().unwrap();
    let (prog, surf) = (dir.path().join("p.json"), dir.path().join("u.csv"));
    let out = masolve(&["run", "--case", "test2", "--N", "4", "--dump-program", p(&prog), "--surface", p(&surf)]);
    assert_eq!(out.status.code(), Some(0));
    let program = masolve_conic::ConicProgram::from_json(&std::fs::read_to_string(&prog).unwrap()).unwrap();
    assert!(program.num_vars() > 0);
    let u = masolve_core::MeshFunction::from_csv(&std::fs::read_to_string(&surf).unwrap()).unwrap();
    assert_eq!(u.mesh().n(), 4);
}

#[test]
fn envelope_of_boundary_and_obstacle_data() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = masolve_core::Mesh::new(4).unwrap();
    // Affine data is its own envelope in both modes.
    let affine = masolve_core::MeshFunction::sample(mesh, |x, y| 1.0 + 2.0 * x - y).unwrap();
    let input = dir.path().join("g.csv");
    std::fs::write(&input, affine.to_csv()).unwrap();
    for mode in ["--boundary", "--obstacle"] {
        let out_path = dir.path().join("env.csv");
        let out = masolve(&["envelope", mode, p(&input), "--tol", "1e-10", "--gap", "1e-12", "--out", p(&out_path)]);
        assert_eq!(out.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        let env = masolve_core::MeshFunction::from_csv(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
        let err = env.values().iter().zip(affine.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-5, "{mode}: {err}");
    }
    assert_eq!(masolve(&["envelope", "--boundary", p(&input), "--obstacle", p(&input)]).status.code(), Some(1));
    assert_eq!(masolve(&["envelope", "--boundary", "/nonexistent.csv"]).status.code(), Some(1));
}
