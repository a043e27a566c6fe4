use nalgebra::{Rotation3, Unit, Vector3};
use proptest::prelude::*;
use sbt_core::curve::CurveSpec;
use sbt_core::geometry::SlenderGeometry;
use sbt_core::kernel::{local_lambda, local_lambda_matrix};
use sbt_core::rigid::{equivariance_check, rigid_motion_gram, RigidSystem, Transform};

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0..1.0f64).prop_map(Vector3::from)
}

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    vec3().prop_filter("nonzero", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

fn catalog() -> impl Strategy<Value = CurveSpec> {
    prop_oneof![
        Just(CurveSpec::Circle),
        (0.6..1.0f64).prop_map(|b| CurveSpec::Ellipse { a: 1.0, b }),
        (0.0..0.04f64, 2u32..5).prop_map(|(amplitude, mode)| CurveSpec::WavyCircle { amplitude, mode }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn local_operator_is_linear_and_symmetric(t in unit(), eps in 1e-4..0.05f64, a in vec3(), b in vec3(), c in -3.0..3.0f64) {
        let lhs = local_lambda(&t, eps, &(a + c * b));
        let rhs = local_lambda(&t, eps, &a) + c * local_lambda(&t, eps, &b);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        let m = local_lambda_matrix(&t, eps);
        prop_assert!((m - m.transpose()).amax() <= 1e-14 * m.amax());
        prop_assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn gram_is_symmetric_positive(spec in catalog()) {
        let g = SlenderGeometry::build(&spec, 64, 0.01).unwrap();
        let gram = rigid_motion_gram(g.curve());
        prop_assert!((gram.g - gram.g.transpose()).amax() <= 1e-14);
        prop_assert!(gram.lambda_min > 0.0);
    }

    #[test]
    fn mobility_superposes(spec in catalog(), eps in 0.005..0.02f64, f1 in vec3(), t1 in vec3(), f2 in vec3(), t2 in vec3(), c in -2.0..2.0f64) {
        let g = SlenderGeometry::build(&spec, 64, eps).unwrap();
        let sys = RigidSystem::new(&g).unwrap();
        let a = sys.solve(&f1, &t1).unwrap().kinematics.stacked();
        let b = sys.solve(&f2, &t2).unwrap().kinematics.stacked();
        let ab = sys.solve(&(f1 + c * f2), &(t1 + c * t2)).unwrap().kinematics.stacked();
        let expect = a + c * b;
        prop_assert!((ab - expect).norm() <= 1e-10 * (a.norm() + c.abs() * b.norm() + 1e-300));
    }

    #[test]
    fn mobility_is_rotation_and_translation_equivariant(spec in catalog(), axis in unit(), angle in 0.0..6.3f64, shift in vec3(), f in vec3(), t in vec3()) {
        let g = SlenderGeometry::build(&spec, 64, 0.01).unwrap();
        let r = *Rotation3::from_axis_angle(&Unit::new_unchecked(axis), angle).matrix();
        for tr in [Transform::Rotation(r), Transform::Translation(shift)] {
            let rep = equivariance_check(&g, &f, &t, &tr).unwrap();
            prop_assert!(rep.relative <= 1e-8, "{:?}", rep.relative);
        }
    }

    #[test]
    fn grand_mobility_is_spd(spec in catalog(), eps in 0.002..0.03f64) {
        let m = RigidSystem::new(&SlenderGeometry::build(&spec, 64, eps).unwrap()).unwrap().grand_mobility().unwrap();
        prop_assert!(m.symmetry_defect <= 1e-8);
        prop_assert!(m.is_positive_definite());
    }
}
