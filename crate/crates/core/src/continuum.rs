//! Cone-harmonic functions, Laplace transforms and the scaling-limit diagnostic.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal_maps::ConformalPair;
use crate::error::{QhError, Result};
use crate::harmonic::{HarmonicTable, HnEvaluator};
use crate::quadrature::{geometric_breaks, integrate_2d, Estimate};
use crate::scalar::{lit, re, Real};
use crate::walk_model::WalkModel;

/// Absolute tolerance of [`continuous_laplace`].
pub const LAPLACE_ABS_TOL: f64 = 1e-9;
/// Relative truncation tolerance of [`discrete_laplace`].
pub const TRUNCATION_REL_TOL: f64 = 1e-8;

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if !(theta > T::zero() && theta < T::PI()) {
        return Err(QhError::Domain(format!("cone angle {theta} outside (0, pi)")));
    }
    Ok(())
}

/// `Im((x / sin theta + y cot theta + i y)^(n pi / theta))`.
pub fn continuous_harmonic<T: Real>(theta: T, n: u32, x: T, y: T) -> Result<T> {
    check_theta(theta)?;
    Ok(cone_harmonic(theta, T::from_u32(n).unwrap() * T::PI() / theta, x, y))
}

fn cone_harmonic<T: Real>(theta: T, alpha: T, x: T, y: T) -> T {
    let z = Complex::new(x / theta.sin() + y * theta.cos() / theta.sin(), y);
    let r = z.norm();
    if r == T::zero() {
        return T::zero();
    }
    r.powf(alpha) * (alpha * z.arg()).sin()
}

/// `sum_{u, v >= 0} h(u, v) exp(-(u x + v y))` over the table, with a bound on the rest.
///
/// The bound assumes `|h(u, v)| <= C (u + v)^g` with `g` fitted on the outer antidiagonals
/// plus one and `C` the smallest constant valid on the table.
pub fn discrete_laplace<T: Real>(table: &HarmonicTable<T>, x: T, y: T) -> Result<Estimate<T>> {
    if !(x > T::zero() && y > T::zero()) {
        return Err(QhError::Domain(format!("transform arguments must be positive, got ({x}, {y})")));
    }
    let (ex, ey) = ((-x).exp(), (-y).exp());
    let mut value = T::zero();
    let mut xp = ex;
    for i in 1..=table.rows {
        let mut yp = ey;
        for j in 1..=table.cols {
            value += table.at(i, j) * xp * yp;
            yp *= ey;
        }
        xp *= ex;
    }
    let (g, c) = growth_envelope(table);
    let tail = if c == T::zero() { T::zero() } else { tail_sum(c, g, x, y, table.rows, table.cols) };
    let allowed = lit::<T>(TRUNCATION_REL_TOL) * value.abs();
    if tail > allowed && tail > T::min_positive_value() {
        return Err(QhError::Truncation(format!(
            "tail bound {tail:e} exceeds {allowed:e}; a {}x{} table is too small at ({x}, {y})",
            table.rows, table.cols
        )));
    }
    Ok(Estimate { value, error: tail })
}

fn growth_envelope<T: Real>(table: &HarmonicTable<T>) -> (T, T) {
    let s_max = table.rows.min(table.cols) + 1;
    let s_min = (s_max / 2).max(2);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in s_min..=s_max {
        let m = (1..s)
            .filter(|&i| i <= table.rows && s - i <= table.cols)
            .fold(T::zero(), |m, i| m.max(table.at(i, s - i).abs()));
        if m > T::zero() {
            xs.push(T::from_usize(s).unwrap().ln());
            ys.push(m.ln());
        }
    }
    let g = if xs.len() >= 2 {
        crate::conformal_maps::linear_fit(&xs, &ys).0.max(T::zero()) + T::one()
    } else {
        T::one()
    };
    let mut c = T::zero();
    for i in 1..=table.rows {
        for j in 1..=table.cols {
            c = c.max(table.at(i, j).abs() / T::from_usize(i + j).unwrap().powf(g));
        }
    }
    (g, c)
}

fn tail_sum<T: Real>(c: T, g: T, x: T, y: T, rows: usize, cols: usize) -> T {
    let stop = lit::<T>(1e-20);
    let term = |u: usize, v: usize| c * int_t::<T>(u + v).powf(g) * (-(x * int_t(u) + y * int_t(v))).exp();
    let row_sum = |u: usize, v0: usize| {
        let past_peak = v0 + (g / y).to_usize().unwrap_or(0) + 1;
        let mut acc = T::zero();
        for v in v0.. {
            let t = term(u, v);
            acc += t;
            if v > past_peak && t <= stop * acc {
                break;
            }
        }
        acc
    };
    let mut total = (1..=rows).fold(T::zero(), |a, u| a + row_sum(u, cols + 1));
    let past_peak = rows + (g / x).to_usize().unwrap_or(0) + 1;
    for u in rows + 1.. {
        let r = row_sum(u, 1);
        total += r;
        if u > past_peak && r <= stop * total {
            break;
        }
    }
    total
}

fn int_t<T: Real>(k: usize) -> T {
    T::from_usize(k).unwrap()
}

/// Adaptive 2-D quadrature of `h_{theta, n}(u, v) exp(-(u x + v y))` over the quadrant.
pub fn continuous_laplace<T: Real>(theta: T, n: u32, x: T, y: T) -> Result<Estimate<T>> {
    continuous_laplace_with(theta, n, x, y, lit(LAPLACE_ABS_TOL))
}

/// [`continuous_laplace`] with an explicit absolute tolerance.
pub fn continuous_laplace_with<T: Real>(theta: T, n: u32, x: T, y: T, abs_tol: T) -> Result<Estimate<T>> {
    check_theta(theta)?;
    if !(x > T::zero() && y > T::zero()) {
        return Err(QhError::Domain(format!("transform arguments must be positive, got ({x}, {y})")));
    }
    let alpha = T::from_u32(n).unwrap() * T::PI() / theta;
    let reach = |s: T| {
        let log_amp = alpha * (lit::<T>(2.0) / theta.sin()).ln();
        let mut limit = T::one() / s;
        while s * limit - alpha * (T::one() + limit).ln() - log_amp < lit(45.0) {
            limit = limit + limit;
        }
        geometric_breaks(T::one() / s, limit)
    };
    let (ub, vb) = (reach(x), reach(y));
    integrate_2d(
        |u, v| Ok(cone_harmonic(theta, alpha, u, v) * (-(u * x + v * y)).exp()),
        &ub,
        &vb,
        abs_tol,
        400,
    )
}

/// How the discrete transform is scaled with `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitReading {
    /// Transform evaluated at `(x / m, y / m)`.
    Scaled,
    /// Transform evaluated at `(floor(m x), floor(m y))`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

/// Settings of [`convergence_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitOptions<T> {
    pub reading: LimitReading,
    /// Required shrink of `|rho(2m) - rho(m)|` per doubling.
    pub contraction: T,
    /// Allowed relative spread of the ratios across points at the largest `m`.
    pub constancy: T,
    /// Added to `n pi / theta` to form the scaling exponent.
    pub exponent_offset: T,
    /// Compare against `sx sy L h_theta(sx x, sy y)` with `sx^2 = sum p k^2`, `sy^2 = sum p l^2`.
    pub covariance_normalized: bool,
    pub quad_tol: T,
}

impl<T: Real> Default for LimitOptions<T> {
    fn default() -> Self {
        LimitOptions {
            reading: LimitReading::Scaled,
            contraction: lit(0.3),
            constancy: lit(0.05),
            exponent_offset: lit(2.0),
            covariance_normalized: true,
            quad_tol: lit(LAPLACE_ABS_TOL),
        }
    }
}

/// Ratios of scaled discrete transforms of `h_n` to the continuous transform of `h_{theta, n}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDiagnostic<T> {
    pub n: u32,
    pub theta: T,
    pub eval_points: Vec<(T, T)>,
    pub m_values: Vec<u32>,
    pub exponent: T,
    /// `ratios[k][p]` for scale `m_values[k]` and point `eval_points[p]`.
    pub ratios: Vec<Vec<T>>,
    pub continuous: Vec<T>,
    /// Coefficient of variation across points, per scale.
    pub variation: Vec<T>,
    /// Worst `|rho(4m) - rho(2m)| / |rho(2m) - rho(m)|` per point.
    pub contraction_ratio: Vec<T>,
    /// Relative spread of the ratios at the largest scale.
    pub spread: T,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub options: LimitOptions<T>,
}

/// `L h_n(s, t) = exp(-s - t) H_n(exp(-s), exp(-t))`.
pub fn discrete_transform<T: Real>(hn: &HnEvaluator<'_, T>, s: T, t: T) -> Result<T> {
    let (x, y) = ((-s).exp(), (-t).exp());
    Ok((hn.eval(re(x), re(y))? * (x * y)).re)
}

/// Runs the scaling-limit comparison over `points` and the scales `m_values`.
pub fn convergence_diagnostic<T: Real>(
    model: &WalkModel<T>,
    pair: &ConformalPair<T>,
    theta: T,
    n: u32,
    points: &[(T, T)],
    m_values: &[u32],
    opts: &LimitOptions<T>,
) -> Result<LimitDiagnostic<T>> {
    let hn = HnEvaluator::new(model, pair, n)?;
    let mo = model.moments();
    let sigma = if opts.covariance_normalized {
        (mo.skk.sqrt(), mo.sll.sqrt())
    } else {
        (T::one(), T::one())
    };
    diagnostic_from_transform(|s, t| discrete_transform(&hn, s, t), sigma, theta, n, points, m_values, opts)
}

/// [`convergence_diagnostic`] for any discrete transform `(s, t) -> L h(s, t)`.
///
/// `sigma` rescales the continuous transform as `sx sy L h_theta(sx x, sy y)`.
#[allow(clippy::too_many_arguments)]
pub fn diagnostic_from_transform<T: Real>(
    transform: impl Fn(T, T) -> Result<T>,
    sigma: (T, T),
    theta: T,
    n: u32,
    points: &[(T, T)],
    m_values: &[u32],
    opts: &LimitOptions<T>,
) -> Result<LimitDiagnostic<T>> {
    check_theta(theta)?;
    if points.is_empty() || m_values.is_empty() {
        return Err(QhError::Grid("need at least one point and one scale".into()));
    }
    let (sx, sy) = sigma;
    let exponent = T::from_u32(n).unwrap() * T::PI() / theta + opts.exponent_offset;
    let continuous = points
        .par_iter()
        .map(|&(x, y)| {
            continuous_laplace_with(theta, n, sx * x, sy * y, opts.quad_tol).map(|e| e.value * sx * sy)
        })
        .collect::<Result<Vec<T>>>()?;
    let mut ratios = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let mf = T::from_u32(m).unwrap();
        let row = points
            .iter()
            .zip(&continuous)
            .map(|(&(x, y), &c)| {
                let (s, t) = match opts.reading {
                    LimitReading::Scaled => (x / mf, y / mf),
                    LimitReading::Literal => ((mf * x).floor(), (mf * y).floor()),
                };
                let d = if s > T::zero() && t > T::zero() { transform(s, t)? } else { T::zero() };
                Ok(d / mf.powf(exponent) / c)
            })
            .collect::<Result<Vec<T>>>()?;
        ratios.push(row);
    }

    let mut notes = Vec::new();
    let mut fail = false;
    let quad_floor = opts.quad_tol * lit(1e3);
    for (p, c) in continuous.iter().enumerate() {
        if c.abs() <= quad_floor {
            notes.push(format!("continuous transform vanishes at point {p}"));
            fail = true;
        }
    }
    let variation: Vec<T> = ratios.iter().map(|r| coefficient_of_variation(r)).collect();
    let last = ratios.last().unwrap();
    let mean = last.iter().fold(T::zero(), |a, &b| a + b) / int_t(last.len());
    let (lo, hi) = last.iter().fold((T::infinity(), T::neg_infinity()), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = if mean != T::zero() { (hi - lo) / mean.abs() } else { T::infinity() };
    if last.iter().any(|v| !v.is_finite() || *v == T::zero()) {
        notes.push("zero or non-finite ratio at the largest scale".into());
        fail = true;
    }
    if spread.is_nan() || spread > opts.constancy {
        notes.push(format!("ratios spread {spread:e} across points at the largest scale"));
        fail = true;
    }

    let keep = T::one() - opts.contraction;
    let mut contraction_ratio = Vec::with_capacity(points.len());
    let mut contracting = ratios.len() >= 3;
    for p in 0..points.len() {
        let diffs: Vec<T> = ratios.windows(2).map(|w| (w[1][p] - w[0][p]).abs()).collect();
        let mut worst = T::zero();
        for d in diffs.windows(2) {
            let q = if d[0] > T::zero() { d[1] / d[0] } else if d[1] == T::zero() { T::zero() } else { T::infinity() };
            worst = worst.max(q);
        }
        if worst > keep {
            contracting = false;
        }
        contraction_ratio.push(worst);
    }
    if ratios.len() < 3 {
        notes.push("fewer than three scales; contraction not testable".into());
    } else if !contracting {
        notes.push("per-point differences do not contract enough".into());
    }
    let variation_falls = variation.windows(2).all(|w| w[1] <= w[0]);
    if !variation_falls {
        notes.push("variation across points does not fall with m".into());
    }
    let verdict = if fail {
        Verdict::Fail
    } else if contracting && variation_falls {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(LimitDiagnostic {
        n,
        theta,
        eval_points: points.to_vec(),
        m_values: m_values.to_vec(),
        exponent,
        ratios,
        continuous,
        variation,
        contraction_ratio,
        spread,
        verdict,
        notes,
        options: *opts,
    })
}

fn coefficient_of_variation<T: Real>(v: &[T]) -> T {
    let n = int_t::<T>(v.len());
    let mean = v.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = v.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
    if mean == T::zero() {
        return T::infinity();
    }
    var.sqrt() / mean.abs()
}

/// Writes the ratio matrix as `m,x,y,ratio` rows.
pub fn write_ratios_csv<T: Real, W: std::io::Write>(diag: &LimitDiagnostic<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| QhError::Io(e.to_string());
    w.write_record(["m", "x", "y", "ratio"]).map_err(io)?;
    for (k, m) in diag.m_values.iter().enumerate() {
        for (p, &(x, y)) in diag.eval_points.iter().enumerate() {
            let f = crate::curve_tracker::fmt17::<T>;
            w.write_record([m.to_string(), f(x), f(y), f(diag.ratios[k][p])]).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
