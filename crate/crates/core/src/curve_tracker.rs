//! Tracking of the kernel root `eta(s)` on the unit circle and the curves `S1`, `S2`.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QhError, Result};
use crate::scalar::{cplx, int, ipow, lit, re, Real};
use crate::walk_model::{CaseTag, WalkModel};

/// Maximum number of step halvings before tracking gives up.
pub const MAX_HALVINGS: u32 = 12;
/// Newton iteration cap per step.
pub const MAX_NEWTON: usize = 50;
/// Allowed overshoot of `|eta|` past the unit circle.
pub const ETA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackCase {
    P11Zero,
    P11Nonzero,
}

/// Tracked root on a uniform angle grid `s = exp(i phi)`, `phi = 2 pi j / N`.
#[derive(Debug, Clone, Serialize)]
pub struct EtaSamples<T> {
    pub phis: Vec<T>,
    pub s_values: Vec<Complex<T>>,
    pub eta_values: Vec<Complex<T>>,
    pub case: TrackCase,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveDiagnostics<T> {
    /// Sign of the signed area of `S1` traversed once (+1 counterclockwise).
    pub s1_orientation: i8,
    pub s2_orientation: i8,
    pub s1_min_step: T,
    pub s2_min_step: T,
    pub s1_self_intersects: bool,
    pub s2_self_intersects: bool,
    /// Largest `|K(eta s, eta / s)|` over the samples.
    pub max_kernel_residual: T,
}

/// Sampled curves `S1 = {eta(s) s}` and `S2 = {eta(s) / s}` in traversal order.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSamples<T> {
    pub phis: Vec<T>,
    pub s1_points: Vec<Complex<T>>,
    pub s2_points: Vec<Complex<T>>,
    /// Number of leading samples that traverse each curve exactly once.
    pub fundamental_len: usize,
    /// `(0, 0)` is an isolated point of the zero set on the torus `|x| = |y|`.
    pub isolated_zero: bool,
    pub diagnostics: CurveDiagnostics<T>,
}

impl<T: Real> CurveSamples<T> {
    pub fn s1_fundamental(&self) -> &[Complex<T>] {
        &self.s1_points[..self.fundamental_len]
    }

    pub fn s2_fundamental(&self) -> &[Complex<T>] {
        &self.s2_points[..self.fundamental_len]
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct K1Report<T> {
    pub enough_samples: bool,
    pub s1_injective: bool,
    pub s2_injective: bool,
    pub s1_orientation: i8,
    pub s2_orientation: i8,
    pub opposite_orientation: bool,
    pub min_derivative_s1: T,
    pub min_derivative_s2: T,
    pub nonvanishing_derivative: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroPosition {
    OnCurves,
    S1PlusS2Minus,
    S1MinusS2Plus,
    BothInterior,
}

#[derive(Debug, Clone, Serialize)]
pub struct XSeries<T> {
    pub c1: T,
    pub c2: T,
    /// `(y, |X(y) - c1 y - c2 y^2| / y^2)` from an implicit root solve.
    pub remainder: Vec<(T, T)>,
    pub little_o_verified: bool,
}

struct EtaEquation<T> {
    terms: Vec<(i32, i32, T)>,
    lead: i32,
}

impl<T: Real> EtaEquation<T> {
    /// `eta^lead - sum p eta^(lead - k - l) s^(l - k)` with `lead` 1 when `p11 = 0`.
    fn new(model: &WalkModel<T>) -> Self {
        let lead = if model.case_tag().p11_zero() { 1 } else { 2 };
        let terms = model.steps().map(|((k, l), p)| (lead - k - l, l - k, p)).collect();
        EtaEquation { terms, lead }
    }

    fn eval(&self, eta: Complex<T>, s: Complex<T>) -> (Complex<T>, Complex<T>) {
        let mut f = ipow(eta, self.lead);
        let mut df = ipow(eta, self.lead - 1) * int::<T>(self.lead as i64);
        for &(e, es, p) in &self.terms {
            let sp = ipow(s, es) * p;
            f -= ipow(eta, e) * sp;
            if e != 0 {
                df -= ipow(eta, e - 1) * sp * int::<T>(e as i64);
            }
        }
        (f, df)
    }

    fn newton(&self, seed: Complex<T>, s: Complex<T>) -> Option<Complex<T>> {
        let mut eta = seed;
        let tol: T = lit(1e-15);
        for _ in 0..MAX_NEWTON {
            let (f, df) = self.eval(eta, s);
            if df.norm() == T::zero() || !df.norm().is_finite() {
                return None;
            }
            let d = f / df;
            eta -= d;
            if !eta.re.is_finite() || !eta.im.is_finite() {
                return None;
            }
            if d.norm() <= tol * eta.norm().max(T::one()) {
                return Some(eta);
            }
        }
        let (f, _) = self.eval(eta, s);
        if f.norm() <= lit::<T>(1e-13) {
            Some(eta)
        } else {
            None
        }
    }
}

/// Slope of the interior branch at the corner, `d eta / d s` at `s = 1`.
fn corner_slope<T: Real>(model: &WalkModel<T>) -> Complex<T> {
    let m = model.moments();
    let disc = (m.a * m.c - m.b * m.b).max(T::zero());
    cplx(-m.b / m.a, disc.sqrt() / m.a)
}

/// Tracks `eta(s)` on `n_samples` equally spaced points of the unit circle.
///
/// The walk starts at `eta(1) = 1` and, for `p11 = 0`, restarts at `eta(-1) = -1`,
/// seeding the first step with the interior corner slope.
pub fn track_eta<T: Real>(model: &WalkModel<T>, n_samples: usize) -> Result<EtaSamples<T>> {
    if n_samples < 64 {
        return Err(QhError::Validation("n_samples must be at least 64".into()));
    }
    let eq = EtaEquation::new(model);
    let case = if model.case_tag().p11_zero() { TrackCase::P11Zero } else { TrackCase::P11Nonzero };
    let two_pi = T::PI() + T::PI();
    let n = n_samples;
    let phis: Vec<T> = (0..n).map(|j| two_pi * int::<T>(j as i64) / int::<T>(n as i64)).collect();
    let s_values: Vec<Complex<T>> = phis.iter().map(|&p| Complex::from_polar(T::one(), p)).collect();
    let slope = corner_slope(model);
    let restart = case == TrackCase::P11Zero;

    let mut etas = Vec::with_capacity(n);
    etas.push(re(T::one()));
    // state: current angle, value, previous (angle, value) for the secant predictor
    let mut cur_phi = T::zero();
    let mut cur = re(T::one());
    let mut prev: Option<(T, Complex<T>)> = None;
    let mut anchor = (T::zero(), T::one());
    for &target in &phis[1..n] {
        let breakpoint = if restart && cur_phi < T::PI() && target >= T::PI() { Some(T::PI()) } else { None };
        let stops: Vec<T> = match breakpoint {
            Some(b) if target > b => vec![b, target],
            Some(b) => vec![b],
            None => vec![target],
        };
        for stop in stops {
            if restart && stop == T::PI() {
                cur_phi = stop;
                cur = re(-T::one());
                prev = None;
                anchor = (T::PI(), -T::one());
                continue;
            }
            let (phi, eta, p) = advance(&eq, slope, anchor, cur_phi, cur, prev, stop)?;
            cur_phi = phi;
            cur = eta;
            prev = p;
        }
        etas.push(cur);
    }
    Ok(EtaSamples { phis, s_values, eta_values: etas, case })
}

type Step<T> = (T, Complex<T>, Option<(T, Complex<T>)>);

/// Moves the tracked root from `phi0` to `phi1`, halving the step on failure.
fn advance<T: Real>(
    eq: &EtaEquation<T>,
    slope: Complex<T>,
    anchor: (T, T),
    phi0: T,
    eta0: Complex<T>,
    prev: Option<(T, Complex<T>)>,
    phi1: T,
) -> Result<Step<T>> {
    let mut phi = phi0;
    let mut eta = eta0;
    let mut prev = prev;
    let mut h = phi1 - phi0;
    let mut halvings = 0u32;
    let slack: T = lit(ETA_SLACK);
    while phi < phi1 {
        let step = h.min(phi1 - phi);
        let next_phi = if phi + step >= phi1 { phi1 } else { phi + step };
        let s = Complex::from_polar(T::one(), next_phi);
        let pred = match prev {
            Some((pp, pe)) => eta + (eta - pe) * ((next_phi - phi) / (phi - pp)),
            None => {
                // interior branch leaving the corner at `anchor`
                let (a_phi, a_val) = anchor;
                let local = Complex::from_polar(T::one(), next_phi - a_phi);
                (re(T::one()) + slope * (local - re(T::one()))) * a_val
            }
        };
        let bound = lit::<T>(10.0) * (next_phi - phi) * (eta - pred).norm().max(T::one()).max(
            match prev {
                Some((pp, pe)) => (eta - pe).norm() / (phi - pp),
                None => slope.norm(),
            },
        );
        let ok = eq.newton(pred, s).filter(|v| {
            v.norm() <= T::one() + slack && (*v - eta).norm() <= bound && (*v - pred).norm() <= bound
        });
        match ok {
            Some(v) => {
                prev = Some((phi, eta));
                phi = next_phi;
                eta = v;
            }
            None => {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(QhError::Tracking(format!(
                        "no convergent continuation near phi = {}",
                        next_phi.to_f64().unwrap_or(f64::NAN)
                    )));
                }
                h = step / lit(2.0);
            }
        }
    }
    Ok((phi, eta, prev))
}

/// Newton refinement of `eta(s)` from a nearby seed.
pub fn refine_eta<T: Real>(model: &WalkModel<T>, s: Complex<T>, seed: Complex<T>) -> Result<Complex<T>> {
    EtaEquation::new(model)
        .newton(seed, s)
        .ok_or_else(|| QhError::Tracking("Newton refinement did not converge".into()))
}

/// The second real root of `K(eta, eta) / (eta - 1)^2` in `(-1, 0)` for `p11 != 0`.
pub fn eta_second_root_at_one<T: Real>(model: &WalkModel<T>) -> Result<T> {
    if model.case_tag().p11_zero() {
        return Err(QhError::Case("second root at s = 1 exists only for p11 != 0".into()));
    }
    let eq = EtaEquation::new(model);
    let f = |x: T| eq.eval(re(x), re(T::one())).0.re;
    let n = 4000;
    let mut a = -T::one() + lit(1e-12);
    let mut fa = f(a);
    for i in 1..=n {
        let b = -T::one() + int::<T>(i) / int::<T>(n) * (T::one() - lit(1e-12));
        let fb = f(b);
        if fa == T::zero() {
            return Ok(a);
        }
        if fa * fb < T::zero() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = (lo + hi) / lit(2.0);
                let fm = f(mid);
                if fm * flo <= T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Ok((lo + hi) / lit(2.0));
        }
        a = b;
        fa = fb;
    }
    Err(QhError::Numerical("no root of the corner equation in (-1, 0)".into()))
}

/// Samples `S1` and `S2` with diagnostics.
pub fn sample_curves<T: Real>(model: &WalkModel<T>, n_samples: usize) -> Result<CurveSamples<T>> {
    let eta = track_eta(model, n_samples)?;
    let s1: Vec<_> = eta.eta_values.iter().zip(&eta.s_values).map(|(e, s)| e * s).collect();
    let s2: Vec<_> = eta.eta_values.iter().zip(&eta.s_values).map(|(e, s)| e / s).collect();
    let fundamental_len = match eta.case {
        TrackCase::P11Zero => n_samples.div_ceil(2),
        TrackCase::P11Nonzero => n_samples,
    };
    let max_res = s1
        .par_iter()
        .zip(s2.par_iter())
        .map(|(&x, &y)| model.kernel_eval(x, y).map(|k| k.norm()).unwrap_or(T::infinity()))
        .reduce(T::zero, |a, b| a.max(b));
    let f1 = &s1[..fundamental_len];
    let f2 = &s2[..fundamental_len];
    let dphi = (T::PI() + T::PI()) / int::<T>(n_samples as i64);
    let diagnostics = CurveDiagnostics {
        s1_orientation: orientation(f1),
        s2_orientation: orientation(f2),
        s1_min_step: min_step(f1) / dphi,
        s2_min_step: min_step(f2) / dphi,
        s1_self_intersects: self_intersects(f1),
        s2_self_intersects: self_intersects(f2),
        max_kernel_residual: max_res,
    };
    let isolated_zero = model.case_tag() == CaseTag::P11ZeroAsym;
    Ok(CurveSamples {
        phis: eta.phis,
        s1_points: s1,
        s2_points: s2,
        fundamental_len,
        isolated_zero,
        diagnostics,
    })
}

/// Writes `phi,re_s1,im_s1,re_s2,im_s2` rows with 17 significant digits.
pub fn write_curves_csv<T: Real, W: Write>(samples: &CurveSamples<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| QhError::Io(e.to_string());
    w.write_record(["phi", "re_s1", "im_s1", "re_s2", "im_s2"]).map_err(io)?;
    for i in 0..samples.len() {
        let (a, b) = (samples.s1_points[i], samples.s2_points[i]);
        w.write_record([
            fmt17(samples.phis[i]),
            fmt17(a.re),
            fmt17(a.im),
            fmt17(b.re),
            fmt17(b.im),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Scientific notation with 17 significant digits.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64().unwrap_or(f64::NAN))
}

/// Sign of the shoelace area of a closed polygon.
pub fn orientation<T: Real>(poly: &[Complex<T>]) -> i8 {
    let a = signed_area(poly);
    if a > T::zero() {
        1
    } else if a < T::zero() {
        -1
    } else {
        0
    }
}

pub fn signed_area<T: Real>(poly: &[Complex<T>]) -> T {
    let n = poly.len();
    let mut acc = T::zero();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        acc += p.re * q.im - q.re * p.im;
    }
    acc / lit(2.0)
}

fn min_step<T: Real>(poly: &[Complex<T>]) -> T {
    let n = poly.len();
    (0..n).map(|i| (poly[(i + 1) % n] - poly[i]).norm()).fold(T::infinity(), |a, b| a.min(b))
}

/// Winding number of a closed polygon around `z`.
pub fn winding_number<T: Real>(poly: &[Complex<T>], z: Complex<T>) -> i32 {
    let n = poly.len();
    let mut total = T::zero();
    for i in 0..n {
        let a = poly[i] - z;
        let b = poly[(i + 1) % n] - z;
        total += (b / a).arg();
    }
    (total / (T::PI() + T::PI())).round().to_i32().unwrap_or(0)
}

/// Distance from `z` to the polygon vertices.
fn min_distance<T: Real>(poly: &[Complex<T>], z: Complex<T>) -> T {
    poly.iter().map(|p| (p - z).norm()).fold(T::infinity(), |a, b| a.min(b))
}

/// Whether two non-adjacent edges of the closed polygon cross.
pub fn self_intersects<T: Real>(poly: &[Complex<T>]) -> bool {
    let n = poly.len();
    if n < 4 {
        return false;
    }
    let clear: T = lit(1e-9);
    (0..n).into_par_iter().any(|i| {
        let (p, p2) = (poly[i], poly[(i + 1) % n]);
        let r = p2 - p;
        ((i + 2)..n).any(|j| {
            if (j + 1) % n == i {
                return false;
            }
            let (q, q2) = (poly[j], poly[(j + 1) % n]);
            let w = q2 - q;
            let cross = r.re * w.im - r.im * w.re;
            if cross == T::zero() {
                return false;
            }
            let d = q - p;
            let t = (d.re * w.im - d.im * w.re) / cross;
            let u = (d.re * r.im - d.im * r.re) / cross;
            t > clear && t < T::one() - clear && u > clear && u < T::one() - clear
        })
    })
}

/// Injectivity, opposite orientation and nonvanishing derivative of the sampled curves.
pub fn check_k1<T: Real>(samples: &CurveSamples<T>) -> K1Report<T> {
    let d = &samples.diagnostics;
    let enough = samples.len() >= 512;
    let opposite = d.s1_orientation != 0 && d.s1_orientation == -d.s2_orientation;
    let tol: T = lit(1e-6);
    let nonvanishing = d.s1_min_step > tol && d.s2_min_step > tol;
    let passed = enough && !d.s1_self_intersects && !d.s2_self_intersects && opposite && nonvanishing;
    K1Report {
        enough_samples: enough,
        s1_injective: !d.s1_self_intersects,
        s2_injective: !d.s2_self_intersects,
        s1_orientation: d.s1_orientation,
        s2_orientation: d.s2_orientation,
        opposite_orientation: opposite,
        min_derivative_s1: d.s1_min_step,
        min_derivative_s2: d.s2_min_step,
        nonvanishing_derivative: nonvanishing,
        passed,
    }
}

/// Position of 0 relative to the curves, from the weights and from winding numbers.
pub fn zero_position<T: Real>(model: &WalkModel<T>, samples: &CurveSamples<T>) -> Result<ZeroPosition> {
    let (p10, p01) = (model.weight(1, 0), model.weight(0, 1));
    let by_weights = match model.case_tag() {
        CaseTag::P11Nonzero => ZeroPosition::BothInterior,
        CaseTag::P11ZeroSym => ZeroPosition::OnCurves,
        CaseTag::P11ZeroAsym if p01 > p10 => ZeroPosition::S1PlusS2Minus,
        CaseTag::P11ZeroAsym => ZeroPosition::S1MinusS2Plus,
    };
    let origin = re(T::zero());
    let (f1, f2) = (samples.s1_fundamental(), samples.s2_fundamental());
    let tol: T = lit(1e-6);
    let near1 = min_distance(f1, origin) < tol;
    let near2 = min_distance(f2, origin) < tol;
    let by_geometry = if near1 && near2 {
        Some(ZeroPosition::OnCurves)
    } else if near1 || near2 {
        None
    } else {
        let in1 = winding_number(f1, origin) != 0;
        let in2 = winding_number(f2, origin) != 0;
        match (in1, in2) {
            (true, true) => Some(ZeroPosition::BothInterior),
            (true, false) => Some(ZeroPosition::S1PlusS2Minus),
            (false, true) => Some(ZeroPosition::S1MinusS2Plus),
            (false, false) => None,
        }
    };
    match by_geometry {
        Some(g) if g == by_weights => Ok(g),
        other => Err(QhError::Inconsistency(format!(
            "weights give {by_weights:?}, winding test gives {other:?}"
        ))),
    }
}

/// Second-order expansion of `X(y)` at 0, checked against an implicit root solve.
///
/// With `swap_axes` the coordinates are exchanged first, giving `Y(x)`.
pub fn x_of_y_series<T: Real>(model: &WalkModel<T>, swap_axes: bool) -> Result<XSeries<T>> {
    let m = if swap_axes { model.swapped() } else { model.clone() };
    let (p10, p01) = (m.weight(1, 0), m.weight(0, 1));
    if m.weight(1, 1) != T::zero() {
        return Err(QhError::Case("expansion requires p11 = 0".into()));
    }
    if p01 <= T::zero() || p01 < p10 {
        return Err(QhError::Case("expansion requires p01 >= p10; retry with swapped axes".into()));
    }
    let c1 = -p10 / p01;
    let c2 = -(p10 / p01 + m.weight(-1, 1) + m.weight(1, -1)) / p01;
    let mut remainder = Vec::new();
    for y in [lit::<T>(0.01), lit(0.005)] {
        let guess = c1 * y + c2 * y * y;
        let mut x = re(guess);
        for _ in 0..MAX_NEWTON {
            let k = m.kernel_eval(x, re(y))?;
            let dk = m.kernel_dx(x, re(y))?;
            let dx = k / dk;
            x -= dx;
            if dx.norm() < lit(1e-17) {
                break;
            }
        }
        remainder.push((y, (x.re - guess).abs() / (y * y)));
    }
    let (r1, r2) = (remainder[0].1, remainder[1].1);
    let little_o_verified = r2 <= lit::<T>(0.6) * r1 || r2 < lit(1e-9);
    Ok(XSeries { c1, c2, remainder, little_o_verified })
}

/// Corner angles of `S1` and `S2` at 1 estimated from the first two samples.
pub fn corner_angles<T: Real>(samples: &CurveSamples<T>) -> (T, T) {
    let est = |pts: &[Complex<T>]| {
        let a = |p: Complex<T>| (T::PI() - (p - re(T::one())).arg().abs()) * lit(2.0);
        let (a1, a2) = (a(pts[1]), a(pts[2]));
        a1 * lit(2.0) - a2
    };
    (est(&samples.s1_points), est(&samples.s2_points))
}

/// Largest distance from a conjugated sample to the nearest sample of the same curve.
pub fn reflection_deviation<T: Real>(samples: &CurveSamples<T>) -> T {
    let dev = |pts: &[Complex<T>]| {
        pts.par_iter()
            .map(|p| min_distance(pts, p.conj()))
            .reduce(T::zero, |a, b| a.max(b))
    };
    dev(&samples.s1_points).max(dev(&samples.s2_points))
}

/// Up to `count` grid points strictly inside a closed polygon.
pub fn interior_points<T: Real>(poly: &[Complex<T>], count: usize) -> Vec<Complex<T>> {
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = cplx(lo.re.min(p.re), lo.im.min(p.im));
        hi = cplx(hi.re.max(p.re), hi.im.max(p.im));
    }
    let mut res = 8usize;
    loop {
        let mut inside = Vec::new();
        for a in 1..res {
            for b in 1..res {
                let z = cplx(
                    lo.re + (hi.re - lo.re) * int::<T>(a as i64) / int::<T>(res as i64),
                    lo.im + (hi.im - lo.im) * int::<T>(b as i64) / int::<T>(res as i64),
                );
                if winding_number(poly, z) != 0 {
                    inside.push(z);
                }
            }
        }
        if inside.len() >= count || res > 512 {
            let stride = (inside.len() / count.max(1)).max(1);
            return inside.into_iter().step_by(stride).take(count).collect();
        }
        res *= 2;
    }
}

/// Smallest `|K(x, y)|` over a `grid x grid` product of points inside `S1` and `S2`.
pub fn polydisc_min_kernel<T: Real>(model: &WalkModel<T>, samples: &CurveSamples<T>, grid: usize) -> Result<T> {
    let xs = interior_points(samples.s1_fundamental(), grid);
    let ys = interior_points(samples.s2_fundamental(), grid);
    let vals: Result<Vec<T>> = xs
        .par_iter()
        .map(|&x| {
            let mut best = T::infinity();
            for &y in &ys {
                best = best.min(model.kernel_eval(x, y)?.norm());
            }
            Ok(best)
        })
        .collect();
    Ok(vals?.into_iter().fold(T::infinity(), |a, b| a.min(b)))
}
