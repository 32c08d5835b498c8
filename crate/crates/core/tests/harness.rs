use masolve_conic::SolveSettings;
use masolve_core::harness::{
    check_variational_inequality, convergence_sweep, run_case, satisfies_scheme, solve_spec, test_case,
};
use masolve_core::{MaError, MeshFunction, Phi, Scheme, StencilSet};

fn tight() -> SolveSettings {
    SolveSettings::default().with_tolerance(1e-10)
}

#[test]
fn smooth_case_on_a_coarse_mesh() {
    let case = test_case("test1").unwrap();
    let run = run_case(&case, 4, Phi::Sqrt1pp, &Scheme::Standard, &SolveSettings::default()).unwrap();
    assert!(run.is_optimal());
    assert!((run.row.error - 3.9093e-3).abs() < 1e-6, "{}", run.row.error);
    assert!(run.row.residual.is_none());
}

#[test]
fn l1_energy_error_is_in_the_expected_range() {
    let case = test_case("test1").unwrap();
    let run = run_case(&case, 4, Phi::L1, &Scheme::Standard, &SolveSettings::default()).unwrap();
    assert!(run.is_optimal());
    assert!((run.row.error / 2.2524e-2 - 1.0).abs() < 0.25, "{}", run.row.error);
}

#[test]
fn point_masses_off_the_mesh_are_rejected() {
    let case = test_case("dirac2").unwrap();
    let err = run_case(&case, 6, Phi::Euclid, &Scheme::Standard, &SolveSettings::default()).unwrap_err();
    assert!(matches!(err, MaError::AtomPlacement(_)), "{err}");
}

#[test]
fn monotone_solution_solves_the_discrete_equation() {
    let case = test_case("test1").unwrap();
    let scheme = Scheme::Monotone(StencilSet::new(1).unwrap());
    let run = run_case(&case, 16, Phi::Sqrt1pp, &scheme, &SolveSettings::default()).unwrap();
    assert!(run.is_optimal());
    assert!(run.row.residual.unwrap() <= 1e-5, "{:?}", run.row.residual);
}

#[test]
fn optimal_solutions_satisfy_their_constraints() {
    let settings = SolveSettings::default();
    for (name, scheme) in [
        ("test1", Scheme::Standard),
        ("test2", Scheme::Monotone(StencilSet::new(2).unwrap())),
        ("test3", Scheme::Monotone(StencilSet::new(1).unwrap())),
    ] {
        let spec = test_case(name).unwrap().spec(8, Phi::Squared, &scheme).unwrap();
        let solved = solve_spec(&spec, &settings).unwrap();
        assert!(satisfies_scheme(&solved.solution, &spec, 10.0 * settings.eps_feas).unwrap(), "{name}");
    }
}

#[test]
fn squared_minimizer_passes_the_variational_inequality() {
    let case = test_case("test3").unwrap();
    let spec = case.spec(8, Phi::Squared, &Scheme::Standard).unwrap();
    let u = solve_spec(&spec, &tight()).unwrap().solution;
    // The exact solution is a quadratic, so its discrete Hessian is exact and
    // it is feasible. Mixtures with the minimizer stay feasible.
    let exact = case.exact_on(spec.mesh).unwrap();
    let samples: Vec<MeshFunction> = [0.0, 0.25, 0.5, 0.9, 1.0].iter().map(|&t| u.combine(1.0 - t, &exact, t)).collect();
    let margin = check_variational_inequality(&u, &samples, &spec, 1e-7).unwrap();
    assert!(margin >= -1e-7, "{margin}");
}

#[test]
fn exact_samples_are_feasible_or_rejected() {
    let case = test_case("test1").unwrap();
    let spec = case.spec(8, Phi::Squared, &Scheme::Standard).unwrap();
    let u = solve_spec(&spec, &tight()).unwrap().solution;
    let exact = case.exact_on(spec.mesh).unwrap();
    match check_variational_inequality(&u, &[exact], &spec, 1e-9) {
        Ok(margin) => assert!(margin >= -1e-7, "{margin}"),
        Err(e) => assert!(matches!(e, MaError::InfeasibleSample(_)), "{e}"),
    }
}

#[test]
fn sweep_rows_are_sorted_and_deduplicated() {
    let case = test_case("test3").unwrap();
    let report =
        convergence_sweep(&case, &[8, 4, 8], Phi::Sqrt1pp, &Scheme::Standard, &SolveSettings::default()).unwrap();
    let ns: Vec<usize> = report.rows.iter().map(|r| r.n).collect();
    assert_eq!(ns, [4, 8]);
    assert!(report.rows.iter().all(|r| r.status == "optimal"));
    assert!(report.to_csv().starts_with("h,error,order,objective,residual,status,iters,seconds\n"));
}
