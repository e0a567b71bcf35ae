mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use quadrant_harmonic::walk_model::{cos_theta_from_abc, CaseTag, Trichotomy};
use quadrant_harmonic::{QhError, WalkModel};

#[test]
fn corpus_validates() {
    for (name, m) in common::corpus() {
        let rep = m.validate();
        assert!(rep.all_passed(), "{name}: {:?}", rep.failures());
    }
    assert_eq!(common::weighted_simple().case_tag(), CaseTag::P11ZeroAsym);
    assert_eq!(common::tandem().case_tag(), CaseTag::P11ZeroAsym);
    assert_eq!(common::five_step().case_tag(), CaseTag::P11ZeroSym);
    assert_eq!(common::diagonal_p11().case_tag(), CaseTag::P11Nonzero);
}

#[test]
fn kernel_at_origin_is_minus_p11() {
    let m = common::diagonal_p11();
    let k = m.kernel_eval(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
    assert!((k.re + 0.25).abs() < 1e-15 && k.im == 0.0);
}

#[test]
fn published_expanded_kernel() {
    let m = common::weighted_simple();
    for &(x, y) in &[(2.0, 3.0), (0.3, -0.7), (-1.5, 0.25)] {
        let want = x * y - (3.0 * x + y + 3.0 * x * y * y + x * x * y) / 8.0;
        assert!((m.kernel_eval_real(x, y).unwrap() - want).abs() < 1e-13);
    }
}

#[test]
fn k_hat_at_zero_and_one() {
    for (_, m) in common::corpus() {
        if m.case_tag() == CaseTag::P11Nonzero {
            assert!(matches!(m.k_hat_eval(0.5), Err(QhError::Case(_))));
            continue;
        }
        let k0 = m.k_hat_eval(0.0).unwrap();
        assert!((k0 - (m.weight(0, 1) - m.weight(1, 0))).abs() < 1e-15);
        assert!(m.k_hat_eval(1.0).unwrap() > 0.0);
    }
    assert!((common::weighted_simple().k_hat_eval(0.0).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn zero_correlation_gives_right_angle() {
    let m = WalkModel::from_triples(&[(1, 0, 0.3), (-1, 0, 0.3), (0, 1, 0.2), (0, -1, 0.2)]).unwrap();
    let a = m.angle_report().unwrap();
    assert!((a.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
}

#[test]
fn cusp_and_crossing_models_classified() {
    assert_eq!(common::cusp().trichotomy_class().unwrap(), Trichotomy::Theta2Cusp);
    assert!(matches!(common::same_orientation().trichotomy_class(), Err(QhError::Unclassified(_))));
    assert_eq!(common::weighted_simple().trichotomy_class().unwrap(), Trichotomy::BothNonzero);
}

#[test]
fn malformed_spec_reports_position() {
    let err = WalkModel::from_spec_json("{\"weights\": [[0, 1, 0.5],\n [0, -1 0.5]]}").unwrap_err();
    match err {
        QhError::Parse(msg) => assert!(msg.contains("line 2"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let dup = WalkModel::from_spec_json("{\"weights\": [[0,1,0.5],[0,1,0.5]]}").unwrap_err();
    assert!(matches!(dup, QhError::DuplicateStep(0, 1)));
}

#[test]
fn spec_round_trip_on_corpus() {
    for (name, m) in common::corpus() {
        let back = WalkModel::from_spec_json(&m.to_spec_json()).unwrap();
        assert_eq!(back, m, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kernel_vanishes_at_one(m in common::zero_drift_models()) {
        let k = m.kernel_eval(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        prop_assert!(k.norm() < 1e-12);
    }

    #[test]
    fn theta_is_mean_of_corner_angles(m in common::zero_drift_models()) {
        if let Ok(a) = m.angle_report() {
            prop_assert!((a.theta - 0.5 * (a.theta1 + a.theta2)).abs() < 1e-10);
            prop_assert!((0.0..=std::f64::consts::PI).contains(&a.theta1));
            prop_assert!((0.0..=std::f64::consts::PI).contains(&a.theta2));
            prop_assert!((a.theta.cos() - cos_theta_from_abc(a.a, a.b, a.c)).abs() < 1e-10);
        }
    }

    #[test]
    fn k_hat_matches_antidiagonal_kernel(m in common::p11_zero_models()) {
        prop_assert_eq!(m.weight(1, 1), 0.0);
        for &x in &[-0.9, -0.5, -0.1, 0.1, 0.5, 0.9] {
            let k = m.kernel_eval_real(x, -x).unwrap();
            prop_assert!((k + x * m.k_hat_eval(x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_vanishes(m in common::zero_drift_models()) {
        let mo = m.moments();
        prop_assert!(mo.drift_k.abs() < 1e-12 && mo.drift_l.abs() < 1e-12);
        prop_assert!((mo.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_json_round_trip(m in common::zero_drift_models()) {
        let back = WalkModel::from_spec_json(&m.to_spec_json()).unwrap();
        prop_assert_eq!(back, m);
    }
}
