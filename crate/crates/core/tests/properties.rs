use masolve_conic::{Cone, SolveSettings};
use masolve_core::harness::{solve_spec, test_case};
use masolve_core::{
    det_and_lambda_min, diff, j_h, monotone_ma, norms, Axis, DiffKind, InteriorFunction, Mesh, MeshFunction, Phi,
    ProgramSpec, Scheme, StencilSet,
};
use proptest::prelude::*;
use std::f64::consts::SQRT_2;

/// Convex and integer valued in grid coordinates: `a i² + 2b ij + c j²` with
/// `b² ≤ ac` plus a few kinks `|p i + r j − s|`. Second differences are then
/// exact, so only the final scaling and product round.
fn convex_sample(mesh: Mesh, q: (i64, i64, i64), kinks: &[(i64, i64, i64)]) -> MeshFunction {
    let (a, c) = (q.0.abs(), q.2.abs());
    let bound = ((a * c) as f64).sqrt().floor() as i64;
    let b = q.1.clamp(-bound, bound);
    let mut v = MeshFunction::zeros(mesh);
    for (i, j) in mesh.nodes() {
        let (x, y) = (i as i64, j as i64);
        let kink: i64 = kinks.iter().map(|&(p, r, s)| (p * x + r * y - s).abs()).sum();
        v.set(i, j, (a * x * x + 2 * b * x * y + c * y * y + kink) as f64);
    }
    v
}

fn quad() -> impl Strategy<Value = (i64, i64, i64)> {
    (-5i64..6, -5i64..6, -5i64..6)
}

fn kinks() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((-3i64..4, -3i64..4, -10i64..10), 0..3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_operator_is_superadditive_and_homogeneous(
        q1 in quad(), k1 in kinks(), q2 in quad(), k2 in kinks(), t8 in 1u32..80, n in 4usize..10, width in 1usize..3,
    ) {
        let mesh = Mesh::new(n).unwrap();
        let st = StencilSet::new(width).unwrap();
        let (v, w) = (convex_sample(mesh, q1, &k1), convex_sample(mesh, q2, &k2));
        let (mv, mw) = (monotone_ma(&v, &st).unwrap(), monotone_ma(&w, &st).unwrap());
        let msum = monotone_ma(&v.combine(1.0, &w, 1.0), &st).unwrap();
        // Multiples of 1/8 keep the scaled samples exact.
        let t = t8 as f64 / 8.0;
        let mt = monotone_ma(&v.scaled(t), &st).unwrap();
        for k in 0..mesh.num_interior() {
            let (a, b, s) = (mv.values()[k], mw.values()[k], msum.values()[k]);
            prop_assert!(a + b - s <= 1e-12 * s.abs().max(1.0));
            prop_assert!((mt.values()[k] - t * t * a).abs() <= 1e-12 * (t * t * a).abs().max(1.0));
        }
    }

    #[test]
    fn energy_is_convex(
        q1 in prop::array::uniform3(-3.0..3.0f64), q2 in prop::array::uniform3(-3.0..3.0f64),
        t in 0.0..1.0f64, n in 2usize..9,
    ) {
        let mesh = Mesh::new(n).unwrap();
        let v = MeshFunction::sample(mesh, |x, y| q1[0] * x * x + q1[1] * (5.0 * y).sin() + q1[2] * x * y).unwrap();
        let w = MeshFunction::sample(mesh, |x, y| q2[0] * y * y + q2[1] * (3.0 * x).cos() + q2[2] * x).unwrap();
        let mix = v.combine(1.0 - t, &w, t);
        for phi in Phi::ALL {
            let lhs = j_h(&mix, phi);
            let rhs = (1.0 - t) * j_h(&v, phi) + t * j_h(&w, phi);
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{phi}");
        }
    }

    #[test]
    fn difference_quotients_are_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, n in 2usize..9) {
        let mesh = Mesh::new(n).unwrap();
        let v = MeshFunction::sample(mesh, |x, y| (x * 3.0).sin() * y).unwrap();
        let w = MeshFunction::sample(mesh, |x, y| (x - y).exp()).unwrap();
        let mix = v.combine(a, &w, b);
        for (i, j) in mesh.interior() {
            for axis in [Axis::X1, Axis::X2] {
                for kind in [DiffKind::Forward, DiffKind::Backward, DiffKind::Centered] {
                    let lhs = diff(&mix, axis, kind, i, j).unwrap();
                    let rhs = a * diff(&v, axis, kind, i, j).unwrap() + b * diff(&w, axis, kind, i, j).unwrap();
                    prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()) * n as f64);
                }
            }
        }
    }

    #[test]
    fn rotated_cone_matches_two_by_two_psd_determinant(
        h11 in -4.0..4.0f64, h22 in -4.0..4.0f64, h12 in -4.0..4.0f64, f in 0.0..4.0f64,
    ) {
        let z = [h11, h22, SQRT_2 * h12, (2.0 * f).sqrt()];
        let (det, lmin) = det_and_lambda_min(h11, h22, h12);
        // Skip points within rounding of the boundary.
        prop_assume!((det - f).abs() > 1e-9 && lmin.abs() > 1e-9);
        prop_assert_eq!(Cone::rsoc(4).contains(&z), lmin >= 0.0 && det >= f);
    }
}

#[test]
fn poincare_inequality_on_a_sine_mode() {
    for n in [4, 8, 16, 32] {
        let mesh = Mesh::new(n).unwrap();
        let pi = std::f64::consts::PI;
        let v = MeshFunction::sample(mesh, |x, y| (pi * x).sin() * (pi * y).sin()).unwrap();
        let nv = norms(&v);
        assert!(nv.h1_seminorm >= 2.0 * nv.l2, "N = {n}");
    }
}

#[test]
fn energy_of_minimizer_grows_as_the_constraint_set_shrinks() {
    // f ≤ f' shrinks the feasible set, so the minimal energy cannot drop.
    let case = test_case("test1").unwrap();
    let settings = SolveSettings::default().with_tolerance(1e-10);
    for scheme in [Scheme::Standard, Scheme::Monotone(StencilSet::new(1).unwrap())] {
        let base = case.spec(8, Phi::Squared, &scheme).unwrap();
        let mut energies = Vec::new();
        for factor in [0.0, 0.5, 1.0, 2.0] {
            let f = InteriorFunction::new(base.mesh, base.f.values().iter().map(|v| v * factor).collect());
            let spec = ProgramSpec { f, ..base.clone() };
            let solved = solve_spec(&spec, &settings).unwrap();
            energies.push(j_h(&solved.solution, Phi::Squared));
        }
        for w in energies.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "{} {energies:?}", scheme.name());
        }
    }
}
