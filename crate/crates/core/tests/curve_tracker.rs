mod common;

use num_complex::Complex64;
use quadrant_harmonic::curve_tracker::*;
use quadrant_harmonic::walk_model::CaseTag;
use quadrant_harmonic::QhError;

const N: usize = 1024;

#[test]
fn eta_anchors_and_bounds() {
    for (name, m) in common::corpus() {
        let e = track_eta(&m, N).unwrap();
        assert!((e.eta_values[0] - 1.0).norm() < 1e-9, "{name}");
        assert!(e.eta_values.iter().all(|z| z.norm() <= 1.0 + 1e-9), "{name}");
        if m.case_tag().p11_zero() {
            assert!((e.eta_values[N / 2] + 1.0).norm() < 1e-9, "{name}");
            for j in 0..N / 2 {
                assert!((e.eta_values[j + N / 2] + e.eta_values[j]).norm() < 1e-9, "{name} at {j}");
            }
        }
    }
}

#[test]
fn too_few_samples_rejected() {
    assert!(track_eta(&common::weighted_simple(), 32).is_err());
}

#[test]
fn kernel_residual_and_reflection() {
    for (name, m) in common::corpus() {
        let c = sample_curves(&m, N).unwrap();
        assert!(c.diagnostics.max_kernel_residual <= 1e-10 * m.kernel_scale(), "{name}");
        assert!(reflection_deviation(&c) < 1e-8, "{name}");
        assert!((c.s1_points[0] - 1.0).norm() < 1e-9 && (c.s2_points[0] - 1.0).norm() < 1e-9);
    }
}

#[test]
fn half_circle_traces_each_curve_once() {
    for (name, m) in common::corpus() {
        let c = sample_curves(&m, N).unwrap();
        let want = if m.case_tag().p11_zero() { N.div_ceil(2) } else { N };
        assert_eq!(c.fundamental_len, want, "{name}");
        let f = c.s1_fundamental();
        let min_gap = f.windows(2).map(|w| (w[1] - w[0]).norm()).fold(f64::INFINITY, f64::min);
        assert!(min_gap > 0.0, "{name}");
        assert!(!self_intersects(f), "{name}");
    }
}

#[test]
fn second_root_at_one() {
    let r = eta_second_root_at_one(&common::diagonal_p11()).unwrap();
    assert!(r > -1.0 && r < 0.0);
}

fn k_hat_root(m: &quadrant_harmonic::WalkModel) -> f64 {
    let f = |x: f64| m.k_hat_eval(x).unwrap();
    let grid: Vec<f64> = (1..400).map(|k| -1.0 + k as f64 / 200.0).collect();
    let w = grid.windows(2).find(|w| f(w[0]).signum() != f(w[1]).signum()).expect("sign change");
    let (mut a, mut b) = (w[0], w[1]);
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if f(a).signum() == f(mid).signum() { a = mid } else { b = mid }
    }
    0.5 * (a + b)
}

fn real_crossing(pts: &[Complex64]) -> f64 {
    let mut best = None;
    for w in pts.windows(2) {
        if (w[0] - 1.0).norm() < 0.05 || w[0].im.signum() == w[1].im.signum() {
            continue;
        }
        let t = w[0].im / (w[0].im - w[1].im);
        best = Some(w[0].re + t * (w[1].re - w[0].re));
    }
    best.expect("curve crosses the real axis")
}

#[test]
fn real_axis_crossings_from_antidiagonal_kernel() {
    let ws = common::weighted_simple();
    let c = sample_curves(&ws, 4096).unwrap();
    let x = real_crossing(c.s1_fundamental());
    assert!((x - (3f64.sqrt() - 2.0)).abs() < 1e-5, "{x}");
    assert!((x - k_hat_root(&ws)).abs() < 1e-5);
    let t = common::tandem();
    let c = sample_curves(&t, 4096).unwrap();
    let root = k_hat_root(&t);
    assert!((root - (5f64.sqrt() - 2.0)).abs() < 1e-9);
    assert!((real_crossing(c.s1_fundamental()) - root).abs() < 1e-5);
    assert!((real_crossing(c.s2_fundamental()) + root).abs() < 1e-5);
}

#[test]
fn symmetric_model_curves_pass_through_zero() {
    let c = sample_curves(&common::five_step(), N).unwrap();
    let d1 = c.s1_points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let d2 = c.s2_points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    assert!(d1 < 1e-6 && d2 < 1e-6);
}

#[test]
fn k1_on_corpus_and_counterexamples() {
    for (name, m) in common::corpus() {
        let r = check_k1(&sample_curves(&m, N).unwrap());
        assert!(r.passed, "{name}: {r:?}");
    }
    let bad = check_k1(&sample_curves(&common::self_intersecting(), N).unwrap());
    assert!(!bad.passed && !bad.s2_injective);
    let same = check_k1(&sample_curves(&common::same_orientation(), N).unwrap());
    assert!(!same.passed && !same.opposite_orientation);
    let few = check_k1(&sample_curves(&common::weighted_simple(), 256).unwrap());
    assert!(!few.enough_samples && !few.passed);
}

#[test]
fn zero_positions() {
    let expect = [
        ("weighted_simple", ZeroPosition::S1PlusS2Minus),
        ("tandem", ZeroPosition::S1MinusS2Plus),
        ("diagonal_p11", ZeroPosition::BothInterior),
        ("reverse_tandem", ZeroPosition::S1PlusS2Minus),
        ("five_step", ZeroPosition::OnCurves),
    ];
    for ((name, m), (ename, want)) in common::corpus().into_iter().zip(expect) {
        assert_eq!(name, ename);
        let c = sample_curves(&m, N).unwrap();
        assert_eq!(zero_position(&m, &c).unwrap(), want, "{name}");
    }
}

#[test]
fn mismatched_samples_are_inconsistent() {
    let c = sample_curves(&common::tandem(), N).unwrap();
    let r = zero_position(&common::weighted_simple(), &c);
    assert!(matches!(r, Err(QhError::Inconsistency(_))));
}

#[test]
fn x_series_coefficients() {
    let s = x_of_y_series(&common::weighted_simple(), false).unwrap();
    assert!((s.c1 + 1.0 / 3.0).abs() < 1e-15 && (s.c2 + 8.0 / 9.0).abs() < 1e-14);
    assert!(s.little_o_verified);
    let sym = x_of_y_series(&common::five_step(), false).unwrap();
    assert!((sym.c1 + 1.0).abs() < 1e-15 && sym.little_o_verified);
    assert!(matches!(x_of_y_series(&common::tandem(), false), Err(QhError::Case(_))));
    let swapped = x_of_y_series(&common::tandem(), true).unwrap();
    assert!(swapped.c1 == 0.0 && swapped.little_o_verified);
    assert!(matches!(x_of_y_series(&common::diagonal_p11(), false), Err(QhError::Case(_))));
}

#[test]
fn corner_angles_match_moments() {
    for (name, m) in common::corpus() {
        let c = sample_curves(&m, 4096).unwrap();
        let a = m.angle_report().unwrap();
        let (t1, t2) = corner_angles(&c);
        assert!((t1 - a.theta1).abs() < 2e-2 && (t2 - a.theta2).abs() < 2e-2, "{name}: {t1} {t2} {a:?}");
    }
}

#[test]
fn kernel_has_no_zero_on_product_of_interiors() {
    for (name, m) in common::corpus() {
        if m.case_tag() == CaseTag::P11ZeroSym {
            continue;
        }
        let c = sample_curves(&m, N).unwrap();
        let k = polydisc_min_kernel(&m, &c, 32).unwrap();
        assert!(k > 0.0, "{name}: {k}");
    }
}

#[test]
fn curves_csv_layout() {
    let c = sample_curves(&common::weighted_simple(), 64).unwrap();
    let mut buf = Vec::new();
    write_curves_csv(&c, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,re_s1,im_s1,re_s2,im_s2"));
    assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0"));
    assert_eq!(text.lines().count(), 65);
    assert!(!text.contains('\r'));
}
