//! Step sets, hypothesis checks, the kernel and moment-derived angles.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};
use crate::scalar::{int, ipow, lit, re, Real};

/// Tolerance used for normalization and zero-drift checks.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Slack allowed on arccos arguments before they are treated as an error.
pub const ARCCOS_SLACK: f64 = 1e-9;

/// Which branch of the construction a walk falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    P11Nonzero,
    P11ZeroSym,
    P11ZeroAsym,
}

impl CaseTag {
    pub fn p11_zero(self) -> bool {
        !matches!(self, CaseTag::P11Nonzero)
    }
}

/// Corner classification of the two curves at the point 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trichotomy {
    BothNonzero,
    Theta2Cusp,
    Theta1Cusp,
}

/// A walk with finitely many steps and their weights.
///
/// Absent steps have weight zero. A weight on `(0, 0)` is removed on construction and
/// the remaining weights are rescaled by `1 / (1 - p00)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkModel<T> {
    steps: BTreeMap<(i32, i32), T>,
    rescaled_p00: Option<T>,
}

/// Second moments and drift of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments<T> {
    pub total: T,
    pub drift_k: T,
    pub drift_l: T,
    /// `sum p k^2`
    pub skk: T,
    /// `sum p l^2`
    pub sll: T,
    /// `sum p k l`
    pub skl: T,
    /// `sum p (k + l)^2`
    pub a: T,
    /// `sum p (k^2 - l^2)`
    pub b: T,
    /// `sum p (k - l)^2`
    pub c: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleReport<T> {
    #[serde(rename = "A")]
    pub a: T,
    #[serde(rename = "B")]
    pub b: T,
    #[serde(rename = "C")]
    pub c: T,
    pub theta1: T,
    pub theta2: T,
    pub theta: T,
    /// `None` when the moments match none of the three classes.
    pub trichotomy_class: Option<Trichotomy>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport<T> {
    pub checks: Vec<HypothesisCheck>,
    pub case: CaseTag,
    /// Original `p00` when the model was rescaled to remove it.
    pub rescaled_p00: Option<T>,
}

impl<T> ValidationReport<T> {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    weights: Vec<(i64, i64, f64)>,
}

#[derive(Serialize)]
struct SpecFileOut {
    weights: Vec<(i32, i32, f64)>,
}

impl<T: Real> WalkModel<T> {
    /// Builds a model from `(k, l) -> p` pairs.
    ///
    /// Zero weights are dropped. Duplicate keys, negative or non-finite weights, weights
    /// above one and an empty step set are rejected.
    pub fn new<I>(steps: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((i32, i32), T)>,
    {
        let mut map = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for ((k, l), p) in steps {
            if !seen.insert((k, l)) {
                return Err(QhError::DuplicateStep(k, l));
            }
            if !p.is_finite() || p < T::zero() || p > T::one() {
                return Err(QhError::Validation(format!(
                    "weight of step ({k}, {l}) must lie in [0, 1], got {p}"
                )));
            }
            if p > T::zero() {
                map.insert((k, l), p);
            }
        }
        let mut rescaled_p00 = None;
        if let Some(p00) = map.remove(&(0, 0)) {
            if p00 >= T::one() {
                return Err(QhError::Validation("all mass on the zero step".into()));
            }
            let f = T::one() - p00;
            for p in map.values_mut() {
                *p /= f;
            }
            rescaled_p00 = Some(p00);
        }
        if map.is_empty() {
            return Err(QhError::Validation("step set is empty".into()));
        }
        Ok(WalkModel { steps: map, rescaled_p00 })
    }

    /// Builds a model from `f64` triples `(k, l, p)`.
    pub fn from_triples(triples: &[(i32, i32, f64)]) -> Result<Self> {
        Self::new(triples.iter().map(|&(k, l, p)| ((k, l), lit(p))))
    }

    /// Parses a `{"weights": [[k, l, p], ...]}` document.
    pub fn from_spec_json(text: &str) -> Result<Self> {
        let spec: SpecFile = serde_json::from_str(text).map_err(|e| {
            QhError::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
        })?;
        let mut triples = Vec::with_capacity(spec.weights.len());
        for (idx, (k, l, p)) in spec.weights.into_iter().enumerate() {
            let k = i32::try_from(k)
                .map_err(|_| QhError::Parse(format!("weights[{idx}]: k out of range")))?;
            let l = i32::try_from(l)
                .map_err(|_| QhError::Parse(format!("weights[{idx}]: l out of range")))?;
            triples.push(((k, l), T::from_f64(p).ok_or_else(|| {
                QhError::Parse(format!("weights[{idx}]: p not representable"))
            })?));
        }
        Self::new(triples)
    }

    /// Serializes the model back to the `{"weights": ...}` file format.
    pub fn to_spec_json(&self) -> String {
        let out = SpecFileOut {
            weights: self
                .steps
                .iter()
                .map(|(&(k, l), p)| (k, l, p.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        };
        serde_json::to_string(&out).expect("serializable")
    }

    /// Same walk with weights divided by their sum.
    pub fn renormalized(&self) -> Self {
        let total = self.steps.values().fold(T::zero(), |a, &p| a + p);
        WalkModel {
            steps: self.steps.iter().map(|(&k, &p)| (k, p / total)).collect(),
            rescaled_p00: self.rescaled_p00,
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = ((i32, i32), T)> + '_ {
        self.steps.iter().map(|(&k, &p)| (k, p))
    }

    pub fn weight(&self, k: i32, l: i32) -> T {
        self.steps.get(&(k, l)).copied().unwrap_or_else(T::zero)
    }

    pub fn rescaled_p00(&self) -> Option<T> {
        self.rescaled_p00
    }

    pub fn case_tag(&self) -> CaseTag {
        if self.weight(1, 1) > T::zero() {
            CaseTag::P11Nonzero
        } else if self.weight(1, 0) == self.weight(0, 1) {
            CaseTag::P11ZeroSym
        } else {
            CaseTag::P11ZeroAsym
        }
    }

    /// Support inside `{-1, 0, 1}^2`.
    pub fn is_small_jump(&self) -> bool {
        self.steps.keys().all(|&(k, l)| k.abs() <= 1 && l.abs() <= 1)
    }

    /// Largest step coordinate in absolute value.
    pub fn support_radius(&self) -> i32 {
        self.steps.keys().map(|&(k, l)| k.abs().max(l.abs())).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude of the kernel polynomial.
    pub fn kernel_scale(&self) -> T {
        self.steps.values().fold(T::one(), |a, &p| a.max(p))
    }

    /// Same walk with the two coordinates exchanged.
    pub fn swapped(&self) -> Self {
        WalkModel {
            steps: self.steps.iter().map(|(&(k, l), &p)| ((l, k), p)).collect(),
            rescaled_p00: self.rescaled_p00,
        }
    }

    pub fn moments(&self) -> Moments<T> {
        let mut m = Moments {
            total: T::zero(),
            drift_k: T::zero(),
            drift_l: T::zero(),
            skk: T::zero(),
            sll: T::zero(),
            skl: T::zero(),
            a: T::zero(),
            b: T::zero(),
            c: T::zero(),
        };
        for (&(k, l), &p) in &self.steps {
            let (kf, lf) = (int::<T>(k as i64), int::<T>(l as i64));
            m.total += p;
            m.drift_k += p * kf;
            m.drift_l += p * lf;
            m.skk += p * kf * kf;
            m.sll += p * lf * lf;
            m.skl += p * kf * lf;
            m.a += p * (kf + lf) * (kf + lf);
            m.b += p * (kf * kf - lf * lf);
            m.c += p * (kf - lf) * (kf - lf);
        }
        m
    }

    /// Checks the standing hypotheses; failures are entries, not errors.
    pub fn validate(&self) -> ValidationReport<T> {
        let m = self.moments();
        let tol: T = lit(WEIGHT_TOL);
        let mut checks = Vec::new();
        let norm_ok = (m.total - T::one()).abs() <= tol;
        checks.push(HypothesisCheck {
            name: "normalization".into(),
            passed: norm_ok,
            detail: format!("sum of weights = {}", m.total),
        });
        let big: Vec<_> = self.steps.keys().filter(|&&(k, l)| k >= 2 || l >= 2).collect();
        checks.push(HypothesisCheck {
            name: "small_positive_jumps".into(),
            passed: big.is_empty(),
            detail: if big.is_empty() {
                "no step with k >= 2 or l >= 2".into()
            } else {
                format!("offending steps {big:?}")
            },
        });
        let irr = self.weight(1, 1) > T::zero()
            || self.weight(0, 1) > T::zero()
            || self.weight(1, 0) > T::zero();
        checks.push(HypothesisCheck {
            name: "irreducibility_surrogate".into(),
            passed: irr,
            detail: "p11, p01, p10 not all zero (full irreducibility is assumed)".into(),
        });
        let drift_ok = m.drift_k.abs() <= tol && m.drift_l.abs() <= tol;
        checks.push(HypothesisCheck {
            name: "zero_drift".into(),
            passed: drift_ok,
            detail: format!("drift = ({}, {})", m.drift_k, m.drift_l),
        });
        checks.push(HypothesisCheck {
            name: "finite_support".into(),
            passed: true,
            detail: format!("support radius {}", self.support_radius()),
        });
        ValidationReport { checks, case: self.case_tag(), rescaled_p00: self.rescaled_p00 }
    }

    /// Fails with `Validation` unless every hypothesis check passes.
    pub fn require_valid(&self) -> Result<()> {
        let rep = self.validate();
        if rep.all_passed() {
            Ok(())
        } else {
            let names: Vec<_> = rep.failures().iter().map(|c| c.name.clone()).collect();
            Err(QhError::Validation(format!("failed checks: {}", names.join(", "))))
        }
    }

    /// `K(x, y) = xy - sum p x^(1-k) y^(1-l)`.
    pub fn kernel_eval(&self, x: Complex<T>, y: Complex<T>) -> Result<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut acc = x * y;
        for (&(k, l), &p) in &self.steps {
            let (ex, ey) = (1 - k, 1 - l);
            if (ex < 0 && x == zero) || (ey < 0 && y == zero) {
                return Err(QhError::Domain(format!("step ({k}, {l}) is singular at zero")));
            }
            acc -= ipow(x, ex) * ipow(y, ey) * p;
        }
        Ok(acc)
    }

    /// Real-argument convenience wrapper around [`Self::kernel_eval`].
    pub fn kernel_eval_real(&self, x: T, y: T) -> Result<T> {
        self.kernel_eval(re(x), re(y)).map(|z| z.re)
    }

    /// Partial derivative of the kernel in `x`.
    pub fn kernel_dx(&self, x: Complex<T>, y: Complex<T>) -> Result<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut acc = y;
        for (&(k, l), &p) in &self.steps {
            let (ex, ey) = (1 - k, 1 - l);
            if ex == 0 {
                continue;
            }
            if (ex - 1 < 0 && x == zero) || (ey < 0 && y == zero) {
                return Err(QhError::Domain(format!("step ({k}, {l}) is singular at zero")));
            }
            acc -= ipow(x, ex - 1) * ipow(y, ey) * (p * int::<T>(ex as i64));
        }
        Ok(acc)
    }

    /// `K^(x)` with `K(x, -x) = -x K^(x)`; defined for `p11 = 0` only.
    pub fn k_hat_eval(&self, x: T) -> Result<T> {
        if self.weight(1, 1) != T::zero() {
            return Err(QhError::Case("k_hat requires p11 = 0".into()));
        }
        let mut acc = x;
        for (&(k, l), &p) in &self.steps {
            let e = 1 - k - l;
            if e < 0 && x == T::zero() {
                return Err(QhError::Domain(format!("step ({k}, {l}) is singular at zero")));
            }
            let sign = if (1 - l).rem_euclid(2) == 0 { T::one() } else { -T::one() };
            acc += sign * p * x.powi(e);
        }
        Ok(acc)
    }

    /// Closed-form corner angles and the trichotomy class.
    pub fn angle_report(&self) -> Result<AngleReport<T>> {
        let m = self.moments();
        let (a, b, c) = (m.a, m.b, m.c);
        if a <= T::zero() {
            return Err(QhError::Degenerate("A = 0".into()));
        }
        let two: T = lit(2.0);
        let d1 = a * (a - two * b + c);
        let d2 = a * (a + two * b + c);
        if d1 <= T::zero() || d2 <= T::zero() {
            return Err(QhError::Degenerate("vanishing second moment".into()));
        }
        let root = (a * c - b * b).max(T::zero()).sqrt();
        let theta1 = (two * (a - b).abs() * root).atan2(a * c - a * a - two * b * b + two * a * b);
        let theta2 = (two * (a + b).abs() * root).atan2(a * c - a * a - two * b * b - two * a * b);
        let theta = (m.skk * m.sll - m.skl * m.skl).max(T::zero()).sqrt().atan2(-m.skl);
        Ok(AngleReport { a, b, c, theta1, theta2, theta, trichotomy_class: classify(&m) })
    }

    /// Trichotomy class from the second moments.
    pub fn trichotomy_class(&self) -> Result<Trichotomy> {
        classify(&self.moments()).ok_or_else(|| {
            QhError::Unclassified("moment inequalities match no corner class".into())
        })
    }
}

fn classify<T: Real>(m: &Moments<T>) -> Option<Trichotomy> {
    let tol = lit::<T>(WEIGHT_TOL) * m.skk.max(m.sll).max(T::one());
    let s = -m.skl;
    let lt = |u: T, v: T| u < v - tol;
    let eq = |u: T, v: T| (u - v).abs() <= tol;
    if lt(s, m.skk) && lt(s, m.sll) {
        Some(Trichotomy::BothNonzero)
    } else if eq(m.skk, s) && lt(s, m.sll) {
        Some(Trichotomy::Theta2Cusp)
    } else if eq(m.sll, s) && lt(s, m.skk) {
        Some(Trichotomy::Theta1Cusp)
    } else {
        None
    }
}

/// `arccos` clamped within [`ARCCOS_SLACK`] of `[-1, 1]`.
pub fn safe_acos<T: Real>(v: T) -> Result<T> {
    let slack: T = lit(ARCCOS_SLACK);
    if !v.is_finite() || v > T::one() + slack || v < -T::one() - slack {
        return Err(QhError::Degenerate(format!("arccos argument {v} outside [-1, 1]")));
    }
    Ok(v.max(-T::one()).min(T::one()).acos())
}

/// `cos(theta)` written through `A`, `B`, `C` only.
pub fn cos_theta_from_abc<T: Real>(a: T, b: T, c: T) -> T {
    let two: T = lit(2.0);
    (c - a) / ((a - two * b + c) * (a + two * b + c)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn ws() -> WalkModel<f64> {
        WalkModel::<f64>::from_triples(&[(0, 1, 0.375), (0, -1, 0.375), (1, 0, 0.125), (-1, 0, 0.125)])
            .unwrap()
    }

    fn tandem() -> WalkModel<f64> {
        let t = 1.0 / 3.0;
        WalkModel::<f64>::from_triples(&[(1, 0, t), (0, -1, t), (-1, 1, t)]).unwrap()
    }

    #[test]
    fn validation_weighted_simple() {
        let r = ws().validate();
        assert!(r.all_passed());
        assert_eq!(r.case, CaseTag::P11ZeroAsym);
    }

    #[test]
    fn validation_single_step_has_drift() {
        let m = WalkModel::<f64>::from_triples(&[(1, 0, 1.0)]).unwrap();
        let r = m.validate();
        let drift = r.checks.iter().find(|c| c.name == "zero_drift").unwrap();
        assert!(!drift.passed);
    }

    #[test]
    fn validation_tandem() {
        let r = tandem().validate();
        assert!(r.all_passed());
        assert_eq!(r.case, CaseTag::P11ZeroAsym);
    }

    #[test]
    fn zero_step_is_rescaled() {
        let m = WalkModel::<f64>::from_triples(&[(0, 0, 0.5), (1, 0, 0.25), (-1, 0, 0.25)]).unwrap();
        assert_eq!(m.rescaled_p00(), Some(0.5));
        assert_abs_diff_eq!(m.weight(1, 0), 0.5);
        assert_eq!(m.weight(0, 0), 0.0);
    }

    #[test]
    fn duplicate_steps_rejected() {
        let err = WalkModel::<f64>::from_triples(&[(0, 1, 0.5), (0, 1, 0.5)]).unwrap_err();
        assert_eq!(err, QhError::DuplicateStep(0, 1));
    }

    #[test]
    fn kernel_values() {
        let m = ws();
        let k11 = m.kernel_eval(cplx(1.0, 0.0), cplx(1.0, 0.0)).unwrap();
        assert!(k11.norm() < 1e-15);
        let expanded = |x: f64, y: f64| x * y - (3.0 * x + y + 3.0 * x * y * y + x * x * y) / 8.0;
        assert_abs_diff_eq!(m.kernel_eval_real(2.0, 3.0).unwrap(), expanded(2.0, 3.0), epsilon = 1e-14);
        assert_abs_diff_eq!(m.kernel_eval_real(2.0, 3.0).unwrap(), -3.375, epsilon = 1e-14);
        let p = WalkModel::<f64>::from_triples(&[(1, 1, 0.25), (-1, 1, 0.25), (0, -1, 0.5)]).unwrap();
        assert_abs_diff_eq!(p.kernel_eval_real(0.0, 0.0).unwrap(), -0.25);
    }

    #[test]
    fn kernel_domain_error() {
        let m = WalkModel::<f64>::from_triples(&[(0, 1, 0.5), (1, -4, 0.5)]).unwrap();
        assert!(m.kernel_eval(cplx(0.0, 0.0), cplx(0.0, 0.0)).is_ok());
        let m = WalkModel::<f64>::from_triples(&[(2, 0, 0.5), (-2, 0, 0.5)]).unwrap();
        assert!(matches!(
            m.kernel_eval(cplx(0.0, 0.0), cplx(1.0, 0.0)),
            Err(QhError::Domain(_))
        ));
    }

    #[test]
    fn k_hat_values() {
        let m = ws();
        assert_abs_diff_eq!(m.k_hat_eval(0.0).unwrap(), 0.25, epsilon = 1e-15);
        assert!(m.k_hat_eval(1.0).unwrap() > 0.0);
        let p = WalkModel::<f64>::from_triples(&[(1, 1, 0.25), (-1, 1, 0.25), (0, -1, 0.5)]).unwrap();
        assert!(matches!(p.k_hat_eval(0.3), Err(QhError::Case(_))));
    }

    #[test]
    fn angles_tandem_and_simple() {
        let t = tandem().angle_report().unwrap();
        assert_abs_diff_eq!(t.a, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.b, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.c, 2.0, epsilon = 1e-15);
        for v in [t.theta1, t.theta2, t.theta] {
            assert_abs_diff_eq!(v, PI / 3.0, epsilon = 1e-12);
        }
        let w = ws().angle_report().unwrap();
        assert_abs_diff_eq!(w.a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.b, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.c, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.theta1, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.theta2, PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.theta, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn trichotomy_examples() {
        assert_eq!(ws().trichotomy_class().unwrap(), Trichotomy::BothNonzero);
        let cusp = WalkModel::<f64>::from_triples(&[(0, 1, 0.5), (-1, 0, 0.25), (1, 0, 0.125), (1, -4, 0.125)])
            .unwrap();
        assert_eq!(cusp.trichotomy_class().unwrap(), Trichotomy::Theta2Cusp);
        let bad = WalkModel::<f64>::from_triples(&[(-1, 0, 0.2), (1, -3, 0.2), (0, 1, 0.6)]).unwrap();
        assert!(matches!(bad.trichotomy_class(), Err(QhError::Unclassified(_))));
        let swapped = cusp.swapped();
        assert_eq!(swapped.trichotomy_class().unwrap(), Trichotomy::Theta1Cusp);
    }

    #[test]
    fn spec_json_round_trip() {
        let m = ws();
        let back = WalkModel::<f64>::from_spec_json(&m.to_spec_json()).unwrap();
        assert_eq!(m, back);
        let dup = r#"{"weights": [[0,1,0.5],[0,1,0.5]]}"#;
        assert_eq!(WalkModel::<f64>::from_spec_json(dup).unwrap_err(), QhError::DuplicateStep(0, 1));
        assert!(matches!(WalkModel::<f64>::from_spec_json("{"), Err(QhError::Parse(_))));
    }

    #[test]
    fn single_precision_kernel() {
        let m = WalkModel::<f32>::from_triples(&[(0, 1, 0.375), (0, -1, 0.375), (1, 0, 0.125), (-1, 0, 0.125)])
            .unwrap();
        assert!((m.kernel_eval_real(2.0, 3.0).unwrap() + 3.375).abs() < 1e-5);
        let a = m.angle_report().unwrap();
        assert!((a.theta - std::f32::consts::FRAC_PI_2).abs() < 1e-5);
    }
}
