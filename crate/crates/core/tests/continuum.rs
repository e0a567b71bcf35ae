mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use quadrant_harmonic::conformal_maps::psi_maps_for;
use quadrant_harmonic::continuum::*;
use quadrant_harmonic::harmonic::{extract_table, HarmonicTable, HnEvaluator};
use quadrant_harmonic::QhError;
use statrs::function::gamma::gamma;

/// `sin(theta) Gamma(a + 2) int_0^theta sin(a phi) / L(phi)^(a + 2) dphi` with
/// `L(phi) = x sin(theta - phi) + y sin(phi)`, by composite Simpson.
fn polar_oracle(theta: f64, n: u32, x: f64, y: f64) -> f64 {
    let a = n as f64 * PI / theta;
    let g = |phi: f64| (a * phi).sin() / (x * (theta - phi).sin() + y * phi.sin()).powf(a + 2.0);
    let steps = 20_000;
    let h = theta / steps as f64;
    let mut s = g(0.0) + g(theta);
    for k in 1..steps {
        s += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    theta.sin() * gamma(a + 2.0) * s * h / 3.0
}

#[test]
fn harmonic_examples() {
    assert!((continuous_harmonic(FRAC_PI_2, 1, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
    assert!(continuous_harmonic(FRAC_PI_2, 2, 1.0, 1.0).unwrap().abs() < 1e-13);
    for theta in [0.3, 1.0, FRAC_PI_2, 2.5] {
        for n in 1..4 {
            assert_eq!(continuous_harmonic(theta, n, 1.7, 0.0).unwrap(), 0.0);
        }
    }
    assert!(matches!(continuous_harmonic(PI, 1, 1.0, 1.0), Err(QhError::Domain(_))));
    assert!(matches!(continuous_harmonic(0.0, 1, 1.0, 1.0), Err(QhError::Domain(_))));
}

#[test]
fn vanishes_on_second_axis() {
    for theta in [0.4f64, 1.2, 2.2] {
        for n in 1..4 {
            let v: f64 = continuous_harmonic(theta, n, 0.0, 1.3).unwrap();
            let a = n as f64 * PI / theta;
            assert!(v.abs() < 1e-12 * a * (1.3 / theta.sin()).powf(a), "{theta} {n}: {v}");
        }
    }
}

/// Second-difference residual of `f_xx - 2 cos(theta) f_xy + f_yy` and the size of the
/// second derivatives, `a (a - 1) |z|^(a - 2) / sin(theta)^2`.
fn fd_operator(theta: f64, n: u32, x: f64, y: f64, h: f64) -> (f64, f64) {
    let f = |a: f64, b: f64| continuous_harmonic(theta, n, a, b).unwrap();
    let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
    let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
    let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    let a = n as f64 * PI / theta;
    let scale = a * (a - 1.0).abs().max(1.0) * z_norm(theta, x, y).powf(a - 2.0) / theta.sin().powi(2);
    (fxx - 2.0 * theta.cos() * fxy + fyy, scale)
}

fn z_norm(theta: f64, x: f64, y: f64) -> f64 {
    (x / theta.sin() + y / theta.tan()).hypot(y)
}

#[test]
fn laplacian_vanishes_at_right_angle() {
    for n in 1..=4 {
        for &(x, y) in &[(0.5, 0.5), (1.0, 2.0), (2.0, 0.3), (1.5, 1.5)] {
            let (r, scale) = fd_operator(FRAC_PI_2, n, x, y, 1e-3);
            assert!(r.abs() <= 1e-5 * scale, "n={n} ({x}, {y}): {r}");
        }
    }
}

proptest! {
    #[test]
    fn transformed_operator_annihilates(theta in 0.4f64..2.7, n in 1u32..4, x in 0.3f64..2.0, y in 0.3f64..2.0) {
        let a = n as f64 * PI / theta;
        let h = 1e-3 * (z_norm(theta, x, y) * theta.sin() / a).min(1.0);
        let (r, scale) = fd_operator(theta, n, x, y, h);
        prop_assert!(r.abs() <= 1e-5 * scale, "{}", r);
    }

    #[test]
    fn homogeneous_of_degree_alpha(theta in 0.4f64..2.7, n in 1u32..4, x in 0.1f64..2.0, y in 0.1f64..2.0, t in 0.2f64..3.0) {
        let a = n as f64 * PI / theta;
        let lhs = continuous_harmonic(theta, n, t * x, t * y).unwrap();
        let rhs = t.powf(a) * continuous_harmonic(theta, n, x, y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(t.powf(a)));
    }
}

#[test]
fn separable_transform_at_sixteen_points() {
    let xs = [0.5, 1.0, 1.7, 3.0];
    for &x in &xs {
        for &y in &xs {
            let e = continuous_laplace(FRAC_PI_2, 1, x, y).unwrap();
            let want = 2.0 / (x * x * y * y);
            assert!((e.value - want).abs() <= 1e-8 * want, "({x}, {y}): {} vs {want}", e.value);
        }
    }
}

#[test]
fn second_separable_transform() {
    assert!(continuous_laplace(FRAC_PI_2, 2, 1.0, 1.0).unwrap().value.abs() < 1e-8);
    let (x, y) = (1.0f64, 2.0f64);
    let want = 24.0 / (x.powi(4) * y * y) - 24.0 / (x * x * y.powi(4));
    let got = continuous_laplace(FRAC_PI_2, 2, x, y).unwrap().value;
    assert!((got - want).abs() <= 1e-8 * want.abs());
}

#[test]
fn matches_polar_gamma_oracle() {
    for theta in [PI / 3.0, 2.0 * PI / 3.0, 1.1] {
        for n in 1..=2 {
            for &(x, y) in &[(1.0, 1.0), (0.7, 1.9), (2.0, 0.8)] {
                let got = continuous_laplace(theta, n, x, y).unwrap().value;
                let want = polar_oracle(theta, n, x, y);
                assert!((got - want).abs() <= 1e-7 * want.abs().max(1e-3), "theta={theta} n={n} ({x}, {y}): {got} vs {want}");
            }
        }
    }
}

#[test]
fn transform_decays_as_y_grows() {
    let mut prev = f64::INFINITY;
    for y in [1.0, 10.0, 100.0, 1000.0] {
        let v = continuous_laplace(FRAC_PI_2, 1, 1.0, y).unwrap().value;
        assert!(v > 0.0 && v < prev);
        assert!((v * y * y - 2.0).abs() < 1e-7);
        prev = v;
    }
    assert!(prev < 1e-5);
}

#[test]
fn transform_rejects_bad_arguments() {
    assert!(matches!(continuous_laplace(FRAC_PI_2, 1, 0.0, 1.0), Err(QhError::Domain(_))));
    assert!(matches!(continuous_laplace(3.5, 1, 1.0, 1.0), Err(QhError::Domain(_))));
    let t = HarmonicTable::from_fn(1, 4, 4, |_, _| 1.0);
    assert!(matches!(discrete_laplace(&t, -1.0, 1.0), Err(QhError::Domain(_))));
}

#[test]
fn discrete_laplace_examples() {
    let t = HarmonicTable::from_fn(0, 40, 40, |i, j| (i * j) as f64);
    let e = std::f64::consts::E;
    let want = (e / ((e - 1.0) * (e - 1.0))).powi(2);
    let got = discrete_laplace(&t, 1.0, 1.0).unwrap();
    assert!((got.value - want).abs() <= 1e-8 * want && got.error <= 1e-8 * want);
    let z = HarmonicTable::from_fn(0, 10, 10, |_, _| 0.0);
    assert_eq!(discrete_laplace(&z, 1.0, 1.0).unwrap().value, 0.0);
    let m = common::weighted_simple();
    let h1 = extract_table(&m, &psi_maps_for(&m).unwrap(), 1, 20, 20, 0.6).unwrap();
    for (x, y) in [(20.0, 20.0), (22.0, 25.0)] {
        let got = discrete_laplace(&h1, x, y).unwrap().value;
        let lead = h1.at(1, 1) * (-(x + y)).exp();
        assert!((got - lead).abs() <= 1e-6 * lead.abs(), "{got} vs {lead}");
    }
}

#[test]
fn generating_function_route_matches_table_sum() {
    for (name, m) in common::corpus() {
        let pair = psi_maps_for(&m).unwrap();
        for n in 1..=2 {
            let t = extract_table(&m, &pair, n, 20, 20, 0.6).unwrap();
            let hn = HnEvaluator::new(&m, &pair, n).unwrap();
            for &(s, u) in &[(2.0, 3.0), (3.0, 3.0)] {
                let a = discrete_laplace(&t, s, u).unwrap();
                let b = discrete_transform(&hn, s, u).unwrap();
                assert!((a.value - b).abs() <= 1e-8 * b.abs().max(a.error), "{name} n={n}: {} vs {b}", a.value);
            }
        }
    }
}

fn weighted_points() -> Vec<(f64, f64)> {
    vec![(0.5, 0.5), (1.0, 2.0)]
}

#[test]
fn weighted_simple_limit_passes() {
    let m = common::weighted_simple();
    let pair = psi_maps_for(&m).unwrap();
    let theta = m.angle_report().unwrap().theta;
    for n in 1..=2 {
        let d = convergence_diagnostic(&m, &pair, theta, n, &weighted_points(), &[8, 16, 32], &LimitOptions::default())
            .unwrap();
        assert_eq!(d.verdict, Verdict::Pass, "n={n}: {:?}", d.notes);
        assert!(d.spread <= 0.05);
        assert!(d.contraction_ratio.iter().all(|&q| q <= 0.7));
        assert!((d.exponent - (n as f64 * 2.0 + 2.0)).abs() < 1e-12);
    }
}

#[test]
fn first_weighted_ratio_against_closed_form() {
    let m = common::weighted_simple();
    let pair = psi_maps_for(&m).unwrap();
    let d = convergence_diagnostic(&m, &pair, FRAC_PI_2, 1, &weighted_points(), &[8, 16, 32], &LimitOptions::default())
        .unwrap();
    let sum_ij = |s: f64, t: f64| {
        let g = |a: f64| (-a).exp() / (1.0 - (-a).exp()).powi(2);
        -32.0 * g(s) * g(t)
    };
    let (sx, sy) = (0.25f64.sqrt(), 0.75f64.sqrt());
    for (k, &mm) in d.m_values.iter().enumerate() {
        let mf = mm as f64;
        for (p, &(x, y)) in d.eval_points.iter().enumerate() {
            let cont = 2.0 / (sx * x * sx * x * sy * y * sy * y) * sx * sy;
            let want = sum_ij(x / mf, y / mf) / mf.powi(4) / cont;
            assert!((d.ratios[k][p] - want).abs() <= 1e-7 * want.abs(), "m={mm}: {} vs {want}", d.ratios[k][p]);
        }
    }
}

#[test]
fn zero_transform_fails() {
    let opts = LimitOptions::default();
    let d = diagnostic_from_transform(|_, _| Ok(0.0), (1.0, 1.0), FRAC_PI_2, 1, &weighted_points(), &[8, 16, 32], &opts)
        .unwrap();
    assert_eq!(d.verdict, Verdict::Fail);
}

#[test]
fn table_transform_matches_evaluator_route() {
    let m = common::weighted_simple();
    let pair = psi_maps_for(&m).unwrap();
    let t = HarmonicTable::from_fn(1, 400, 400, |i, j| -32.0 * (i * j) as f64);
    let opts = LimitOptions::default();
    let mo = m.moments();
    let sigma = (mo.skk.sqrt(), mo.sll.sqrt());
    let pts = [(1.0, 2.0), (2.0, 2.0)];
    let a = diagnostic_from_transform(|s, u| discrete_laplace(&t, s, u).map(|e| e.value), sigma, FRAC_PI_2, 1, &pts, &[4, 8], &opts)
        .unwrap();
    let b = convergence_diagnostic(&m, &pair, FRAC_PI_2, 1, &pts, &[4, 8], &opts).unwrap();
    for (ra, rb) in a.ratios.iter().flatten().zip(b.ratios.iter().flatten()) {
        assert!((ra - rb).abs() <= 1e-6 * rb.abs());
    }
}

#[test]
fn halved_angle_fails() {
    let m = common::weighted_simple();
    let pair = psi_maps_for(&m).unwrap();
    let d = convergence_diagnostic(&m, &pair, FRAC_PI_2 / 2.0, 1, &weighted_points(), &[8, 16, 32], &LimitOptions::default())
        .unwrap();
    assert_eq!(d.verdict, Verdict::Fail, "{:?}", d);
}

#[test]
fn literal_reading_is_selectable() {
    let m = common::weighted_simple();
    let pair = psi_maps_for(&m).unwrap();
    let opts = LimitOptions { reading: LimitReading::Literal, ..LimitOptions::default() };
    let d = convergence_diagnostic(&m, &pair, FRAC_PI_2, 1, &weighted_points(), &[8, 16, 32], &opts).unwrap();
    assert_eq!(d.options.reading, LimitReading::Literal);
    assert_ne!(d.verdict, Verdict::Pass);
}

#[test]
fn vanishing_continuous_transform_is_flagged() {
    let m = common::tandem();
    let pair = psi_maps_for(&m).unwrap();
    let theta = m.angle_report().unwrap().theta;
    let d = convergence_diagnostic(&m, &pair, theta, 2, &[(0.5, 0.5), (1.0, 2.0)], &[8, 16, 32], &LimitOptions::default())
        .unwrap();
    assert_eq!(d.verdict, Verdict::Fail);
    assert!(d.notes.iter().any(|s| s.contains("vanishes")));
}

#[test]
fn ratios_csv_layout() {
    let m = common::weighted_simple();
    let pair = psi_maps_for(&m).unwrap();
    let d = convergence_diagnostic(&m, &pair, FRAC_PI_2, 1, &weighted_points(), &[8, 16], &LimitOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_ratios_csv(&d, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "m,x,y,ratio");
    assert_eq!(lines.len(), 5);
    assert!(!text.contains('\r'));
}
