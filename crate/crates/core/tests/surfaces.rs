use astig_core::curve::{build_curve, Component};
use astig_core::euler_lagrange::{constant_curvature_solutions, ConstantKind};
use astig_core::phase_plane::Branch;
use astig_core::surface::{
    astigmatism_deviation, cylinder_surface, gauss_codazzi_refinement, hopf_torus_radii, max_mean_curvature,
    principal_curvatures, rotate_curve, CurvatureMode,
};
use astig_core::ModelParams;
use proptest::prelude::*;

const SETS: [(f64, f64, f64); 9] = [
    (0.0, 1.0, 0.8),
    (0.0, 1.0, 1.55),
    (0.0, 1.0, 9.0),
    (1.0, 1.0, 1.5),
    (1.0, 1.0, 2.5),
    (1.0, 1.0, 6.0),
    (-1.0, 1.25, 0.3),
    (-1.0, 1.25, 2.5),
    (-1.0, 1.25, 20.0),
];

#[test]
fn generated_surfaces_have_constant_astigmatism() {
    for (rho, mu, d) in SETS {
        let p = ModelParams::new(rho, mu, d).unwrap();
        let mesh = rotate_curve(&build_curve(&p, Component::Inner, 200).unwrap(), 64).unwrap();
        let an = astigmatism_deviation(&principal_curvatures(&mesh, CurvatureMode::Analytic).unwrap()).unwrap();
        let fd = astigmatism_deviation(&principal_curvatures(&mesh, CurvatureMode::FiniteDifference).unwrap()).unwrap();
        assert!(an < 1e-6, "({rho}, {mu}, {d}) analytic {an:e}");
        assert!(fd < 1e-3, "({rho}, {mu}, {d}) finite difference {fd:e}");
    }
}

#[test]
fn codazzi_refinement_order() {
    for (rho, mu, d) in [(0.0, 1.0, 1.55), (1.0, 1.0, 2.5), (-1.0, 1.25, 20.0)] {
        let p = ModelParams::new(rho, mu, d).unwrap();
        let (_, order) = gauss_codazzi_refinement(&p, Component::Inner, &[250, 500, 1000], 9).unwrap();
        assert!(order >= 1.5, "({rho}, {mu}, {d}) order {order}");
    }
}

#[test]
fn constant_curvature_case_analysis() {
    assert!(constant_curvature_solutions(0.0, 1.0).is_empty());
    // mu < sqrt(rho)/2: two parallels; equality: one circle; above: none.
    let two = constant_curvature_solutions(1.0, 0.4);
    assert_eq!(two.len(), 2);
    assert!(two.iter().all(|s| s.kind == ConstantKind::Parallel));
    let one = constant_curvature_solutions(1.0, 0.5);
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].kind, ConstantKind::Circle);
    assert!(constant_curvature_solutions(1.0, 0.6).is_empty());
    for mu in [0.3, 1.0, 2.5] {
        let sols = constant_curvature_solutions(-1.0, mu);
        assert_eq!(sols.len(), 2);
        let mut kinds: Vec<_> = sols.iter().map(|s| s.kind).collect();
        kinds.sort_by_key(|k| *k as u8);
        assert_eq!(kinds, vec![ConstantKind::Circle, ConstantKind::Hypercycle]);
        for s in &sols {
            assert!(s.residual(-1.0, mu).abs() < 1e-10);
        }
    }
}

#[test]
fn clifford_torus() {
    let (r1, r2) = hopf_torus_radii(1.0, 0.5, Branch::Plus).unwrap();
    assert!((r1 - r2).abs() < 1e-12 && (r1 * r1 + r2 * r2 - 1.0).abs() < 1e-12);
    let mesh = cylinder_surface(1.0, 0.5, 0, 64, 64).unwrap();
    let h = max_mean_curvature(&principal_curvatures(&mesh, CurvatureMode::FiniteDifference).unwrap()).unwrap();
    assert!(h < 1e-6, "{h:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hopf_radii_lie_on_the_sphere(rho in 0.1f64..5.0, t in 0.01f64..0.999) {
        let mu = t * rho.sqrt() / 2.0;
        for branch in [Branch::Plus, Branch::Minus] {
            if let Ok((r1, r2)) = hopf_torus_radii(rho, mu, branch) {
                prop_assert!((r1 * r1 + r2 * r2 - 1.0 / rho).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cylinders_are_constant_astigmatism(rho in prop_oneof![0.2f64..3.0, -3.0f64..-0.2], t in 0.1f64..0.95) {
        let mu = if rho > 0.0 { t * rho.sqrt() / 2.0 } else { 4.0 * t };
        for which in 0..constant_curvature_solutions(rho, mu).len() {
            let mesh = cylinder_surface(rho, mu, which, 64, 32).unwrap();
            let dev = astigmatism_deviation(&principal_curvatures(&mesh, CurvatureMode::Analytic).unwrap()).unwrap();
            prop_assert!(dev < 1e-8, "{}", dev);
        }
    }
}
