use micz::dynamics::{cone_solve, integrate_reduced, Scenario};
use micz::liealg::{bracket, expm, expm_via_normal_form, inner, normal_form, split_vh, SkewMatrix};
use micz::monopole::Gauge;
use nalgebra::DVector;
use proptest::prelude::*;

fn skew(n: usize, coeffs: &[f64]) -> SkewMatrix {
    let mut entries = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            entries.push((i, j, coeffs[k]));
            k += 1;
        }
    }
    SkewMatrix::from_coefficients(n, &entries).unwrap()
}

fn skew_of(n: usize, bound: f64) -> impl Strategy<Value = SkewMatrix> {
    prop::collection::vec(-bound..bound, n * (n - 1) / 2).prop_map(move |c| skew(n, &c))
}

fn skew_triple() -> impl Strategy<Value = (SkewMatrix, SkewMatrix, SkewMatrix)> {
    (2usize..=6).prop_flat_map(|n| (skew_of(n, 2.0), skew_of(n, 2.0), skew_of(n, 2.0)))
}

fn skew_any() -> impl Strategy<Value = SkewMatrix> {
    (2usize..=7).prop_flat_map(|n| skew_of(n, 3.0))
}

fn diff(a: &SkewMatrix, b: &SkewMatrix) -> f64 {
    (a.matrix() - b.matrix()).amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_is_a_rotation(xi in skew_any()) {
        let g = expm(&xi);
        prop_assert!(g.orthogonality_residual() < 1e-12);
        prop_assert!((g.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_parameter_group_law(xi in skew_any(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let lhs = expm(&xi.scale(a)).compose(&expm(&xi.scale(b))).unwrap();
        let rhs = expm(&xi.scale(a + b));
        prop_assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-12);
    }

    #[test]
    fn normal_form_exponential_agrees(xi in skew_any()) {
        let a = expm(&xi);
        let b = expm_via_normal_form(&xi);
        prop_assert!((a.matrix() - b.matrix()).amax() < 1e-10);
    }

    #[test]
    fn normal_form_preserves_norm(xi in skew_any()) {
        let nf = normal_form(&xi);
        let sum: f64 = nf.omegas.iter().map(|w| w * w).sum();
        prop_assert!((sum - xi.norm_sq()).abs() < 1e-10 * (1.0 + xi.norm_sq()));
        prop_assert!(nf.residual < 1e-10 * (1.0 + xi.norm()));
        prop_assert!(nf.omegas.iter().rev().skip(1).all(|&w| w >= 0.0));
    }

    #[test]
    fn inner_product_is_adjoint_invariant((xi, eta, zeta) in skew_triple()) {
        let g = expm(&zeta);
        let lhs = inner(&xi.conjugate(&g).unwrap(), &eta.conjugate(&g).unwrap()).unwrap();
        let rhs = inner(&xi, &eta).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11);
        // infinitesimal form: <[ζ, ξ], η> + <ξ, [ζ, η]> = 0
        let inf = inner(&bracket(&zeta, &xi).unwrap(), &eta).unwrap() + inner(&xi, &bracket(&zeta, &eta).unwrap()).unwrap();
        prop_assert!(inf.abs() < 1e-11);
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi((a, b, c) in skew_triple()) {
        let ab = bracket(&a, &b).unwrap();
        let ba = bracket(&b, &a).unwrap();
        prop_assert!(diff(&ab, &ba.scale(-1.0)) < 1e-12);
        let t1 = bracket(&a, &bracket(&b, &c).unwrap()).unwrap();
        let t2 = bracket(&b, &bracket(&c, &a).unwrap()).unwrap();
        let t3 = bracket(&c, &ab).unwrap();
        let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
        prop_assert!(sum.matrix().amax() < 1e-11);
    }

    #[test]
    fn vertical_horizontal_split_is_orthogonal(xi in skew_any()) {
        let (v, h) = split_vh(&xi);
        prop_assert!(diff(&v.add(&h).unwrap(), &xi) == 0.0);
        prop_assert!(inner(&v, &h).unwrap().abs() < 1e-14);
        let n = xi.dim();
        prop_assert!((0..n).all(|k| v.coeff(k, n - 1) == 0.0));
    }

    #[test]
    fn section_covers_the_direction(c in prop::collection::vec(-1.0f64..1.0, 4), r in 0.2f64..5.0) {
        let x = DVector::from_vec(c);
        prop_assume!(x.norm() > 1e-3);
        let gauge = Gauge::standard(4);
        prop_assume!(gauge.angle_to_string(&x) > 1e-2);
        let x = x.normalize() * r;
        let p = gauge.section(&x).unwrap();
        prop_assert!((p.section.pole_image() - x.normalize()).amax() < 1e-12);
        prop_assert!(p.section.orthogonality_residual() < 1e-12);
    }

    #[test]
    fn curvature_is_antisymmetric_and_radially_flat(
        c in prop::collection::vec(-1.0f64..1.0, 5),
        v in prop::collection::vec(-1.0f64..1.0, 5),
        w in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let gauge = Gauge::standard(5);
        let x = DVector::from_vec(c);
        prop_assume!(x.norm() > 0.1 && gauge.angle_to_string(&x) > 0.1);
        let (v, w) = (DVector::from_vec(v), DVector::from_vec(w));
        let fvw = gauge.curvature(&x, &v, &w).unwrap();
        let fwv = gauge.curvature(&x, &w, &v).unwrap();
        prop_assert!(diff(fvw.value(), &fwv.value().scale(-1.0)) < 1e-12);
        prop_assert!(gauge.curvature(&x, &v, &v).unwrap().norm_sq() < 1e-24);
        // radial directions are flat
        prop_assert!(gauge.curvature(&x, &x, &w).unwrap().norm_sq() < 1e-20);
    }
}

fn scenario_of(n: usize, coeffs: &[f64], dir: &[f64], r0: f64, pr0: f64) -> Option<Scenario> {
    let w = DVector::from_column_slice(dir);
    if w.norm() < 0.1 {
        return None;
    }
    let mut s = Scenario::new(skew(n, coeffs), w.normalize(), r0, pr0, (0.0, 1.0));
    let period = s.radial_period()?;
    s.t_span = (0.0, period);
    Some(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solvers_conserve_and_agree(
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        dir in prop::collection::vec(-1.0f64..1.0, 4),
        r0 in 0.6f64..2.0,
        pr0 in -0.4f64..0.4,
    ) {
        let s = scenario_of(4, &coeffs, &dir, r0, pr0);
        prop_assume!(s.as_ref().is_some_and(|s| s.mu2() > 0.05 && s.energy() < -0.05));
        let s = s.unwrap();
        let times = s.time_grid().unwrap();
        let cone = cone_solve(&s, &times).unwrap();
        let reduced = integrate_reduced(&s, &times).unwrap();
        prop_assert!(cone.casimir_drift() < 1e-10);
        prop_assert!(reduced.energy_drift() < 1e-8);
        prop_assert!(reduced.casimir_drift() < 1e-10);
        for (a, b) in cone.samples.iter().zip(&reduced.samples) {
            prop_assert!(((a.q.norm() - a.r).abs()) < 1e-12);
            prop_assert!((&a.q - &b.q).norm() < 1e-6);
        }
    }
}
