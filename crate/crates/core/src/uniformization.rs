//! Rational parametrization of the kernel zero set for small-jump walks.

use num_complex::Complex;
use serde::Serialize;

use crate::curve_tracker::CurveSamples;
use crate::error::{QhError, Result};
use crate::scalar::{cplx, int, lit, principal_sqrt, re, Real};
use crate::walk_model::WalkModel;

/// Allowed remainder when dividing the discriminant by `(x - 1)^2`.
pub const DEFLATION_TOL: f64 = 1e-8;

/// Real branch points of the two discriminants; `None` stands for infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminantRoots<T> {
    pub x1: T,
    pub x4: Option<T>,
    pub y1: T,
    pub y4: Option<T>,
    /// `x1` or `y1` sits at -1.
    pub touches_minus_one: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformizationData<T> {
    pub roots: DiscriminantRoots<T>,
    pub s0: Complex<T>,
    pub s1: Complex<T>,
    pub s2: Complex<T>,
    pub s3: Complex<T>,
    /// `s_i + 1 / s_i`, always real.
    pub sigma: [T; 4],
    pub rho: Complex<T>,
    pub theta: T,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConsistencyReport<T> {
    /// Largest `|K(x(s), y(s))|` over the test circles.
    pub max_kernel_residual: T,
    /// `|x(s) - 1|` at a large `s`.
    pub x_at_infinity: T,
    /// Distance of `x([0, 1])` from the segment `[x1, 1]`.
    pub x_cut_deviation: T,
    /// Distance of `y(exp(i theta) [0, 1])` from `[y1, 1]`.
    pub y_cut_deviation: T,
    /// Largest mismatch between sampled curve pairs and `(x(s), y(s))`.
    pub curve_pair_deviation: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    X,
    Y,
}

fn quadratic_coefficients<T: Real>(model: &WalkModel<T>, side: Side) -> [[T; 3]; 3] {
    let p = |k, l| model.weight(k, l);
    // each row is an ascending polynomial: [a, b, c] in K = a u^2 + b u + c
    match side {
        Side::X => [
            [-p(1, -1), -p(0, -1), -p(-1, -1)],
            [-p(1, 0), T::one(), -p(-1, 0)],
            [-p(1, 1), -p(0, 1), -p(-1, 1)],
        ],
        Side::Y => [
            [-p(-1, 1), -p(-1, 0), -p(-1, -1)],
            [-p(0, 1), T::one(), -p(0, -1)],
            [-p(1, 1), -p(1, 0), -p(1, -1)],
        ],
    }
}

fn poly_mul<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 5] {
    let mut out = [T::zero(); 5];
    for i in 0..3 {
        for j in 0..3 {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// Ascending coefficients of `d = b^2 - 4 a c` for the chosen variable.
fn discriminant<T: Real>(model: &WalkModel<T>, side: Side) -> [T; 5] {
    let [a, b, c] = quadratic_coefficients(model, side);
    let bb = poly_mul(&b, &b);
    let ac = poly_mul(&a, &c);
    let mut d = [T::zero(); 5];
    for i in 0..5 {
        d[i] = bb[i] - lit::<T>(4.0) * ac[i];
    }
    d
}

/// Ascending discriminant coefficients in `x`.
pub fn discriminant_x<T: Real>(model: &WalkModel<T>) -> [T; 5] {
    discriminant(model, Side::X)
}

/// Ascending discriminant coefficients in `y`.
pub fn discriminant_y<T: Real>(model: &WalkModel<T>) -> [T; 5] {
    discriminant(model, Side::Y)
}

/// Divides by `(u - 1)` once, returning quotient (ascending) and remainder.
fn deflate_one<T: Real>(d: &[T]) -> (Vec<T>, T) {
    let n = d.len();
    let mut q = vec![T::zero(); n - 1];
    let mut carry = T::zero();
    for i in (0..n).rev() {
        let v = d[i] + carry;
        if i == 0 {
            return (q, v);
        }
        q[i - 1] = v;
        carry = v;
    }
    unreachable!()
}

fn branch_points<T: Real>(model: &WalkModel<T>, side: Side) -> Result<(T, Option<T>)> {
    let d = discriminant(model, side);
    let scale = d.iter().fold(T::zero(), |a, &c| a.max(c.abs()));
    let (q1, r1) = deflate_one(&d);
    let (q, r2) = deflate_one(&q1);
    let tol = lit::<T>(DEFLATION_TOL) * scale.max(T::one());
    if r1.abs() > tol || r2.abs() > tol {
        return Err(QhError::Numerical(format!(
            "1 is not a double root of the discriminant (remainders {r1}, {r2})"
        )));
    }
    let (c0, c1, c2) = (q[0], q[1], q[2]);
    let qscale = c0.abs().max(c1.abs()).max(c2.abs());
    let tiny = lit::<T>(1e-14) * qscale;
    let in_range = |v: T| v >= -T::one() - lit(1e-12) && v < T::one();
    if c2.abs() <= tiny {
        if c1.abs() <= tiny {
            return Err(QhError::Numerical("discriminant has degree below 3".into()));
        }
        let x1 = -c0 / c1;
        if !in_range(x1) {
            return Err(QhError::Numerical(format!("branch point {x1} outside [-1, 1)")));
        }
        return Ok((x1.max(-T::one()), None));
    }
    let disc = c1 * c1 - lit::<T>(4.0) * c2 * c0;
    if disc < -tiny * qscale {
        return Err(QhError::Numerical("complex branch points".into()));
    }
    let sq = disc.max(T::zero()).sqrt();
    let big = -(c1 + c1.signum() * sq) / (lit::<T>(2.0) * c2);
    let small = if big == T::zero() { T::zero() } else { c0 / (c2 * big) };
    let (lo, hi) = if in_range(small) && !in_range(big) {
        (small, big)
    } else if in_range(big) && !in_range(small) {
        (big, small)
    } else if in_range(small) && in_range(big) {
        return Err(QhError::Numerical("two branch points inside [-1, 1)".into()));
    } else {
        return Err(QhError::Numerical("no branch point inside [-1, 1)".into()));
    };
    Ok((lo.max(-T::one()), Some(hi)))
}

/// Branch points `x1, x4, y1, y4` of the kernel read as a quadratic in each variable.
pub fn discriminant_roots<T: Real>(model: &WalkModel<T>) -> Result<DiscriminantRoots<T>> {
    if !model.is_small_jump() {
        return Err(QhError::Support("steps must lie in {-1, 0, 1}^2".into()));
    }
    let (x1, x4) = branch_points(model, Side::X)?;
    let (y1, y4) = branch_points(model, Side::Y)?;
    let at = |v: T| (v + T::one()).abs() <= lit(1e-12);
    Ok(DiscriminantRoots { x1, x4, y1, y4, touches_minus_one: at(x1) || at(y1) })
}

/// `(s_even, s_odd)` from the published closed forms, infinity handled as a limit.
fn s_pair<T: Real>(u1: T, u4: Option<T>) -> (Complex<T>, Complex<T>) {
    let two: T = lit(2.0);
    match u4 {
        Some(u4) => {
            let den = u4 - u1;
            let a = (re(two - (u1 + u4)) + principal_sqrt(re((T::one() - u1) * (T::one() - u4))) * two) / den;
            let b = (re(u1 + u4 - two * u1 * u4)
                + principal_sqrt(re(u1 * u4 * (T::one() - u1) * (T::one() - u4))) * two)
                / den;
            (a, b)
        }
        None => {
            let a = re(-T::one());
            let b = re(T::one() - two * u1) + principal_sqrt(re(-u1 * (T::one() - u1))) * two;
            (a, b)
        }
    }
}

/// `(sigma_even, sigma_odd)` directly from the branch points.
fn sigma_pair<T: Real>(u1: T, u4: Option<T>) -> (T, T) {
    let two: T = lit(2.0);
    let s_even = match u4 {
        Some(u4) => (lit::<T>(4.0) - two * (u1 + u4)) / (u4 - u1),
        None => -two,
    };
    (s_even, two - u1 * (two - s_even))
}

/// Full uniformization data: branch points, `s0..s3`, `rho`.
pub fn uniformization_params<T: Real>(model: &WalkModel<T>) -> Result<UniformizationData<T>> {
    let roots = discriminant_roots(model)?;
    let angles = model.angle_report()?;
    let (s0, s1) = s_pair(roots.x1, roots.x4);
    let (s2, s3) = s_pair(roots.y1, roots.y4);
    let (g0, g1) = sigma_pair(roots.x1, roots.x4);
    let (g2, g3) = sigma_pair(roots.y1, roots.y4);
    Ok(UniformizationData {
        roots,
        s0,
        s1,
        s2,
        s3,
        sigma: [g0, g1, g2, g3],
        rho: Complex::from_polar(T::one(), -angles.theta),
        theta: angles.theta,
    })
}

impl<T: Real> UniformizationData<T> {
    /// `x(s) = 1 + (sigma0 - sigma1) / (s + 1/s - sigma0)`.
    pub fn x_of_s(&self, s: Complex<T>) -> Complex<T> {
        let [g0, g1, _, _] = self.sigma;
        re(T::one()) + re(g0 - g1) / (s + s.inv() - g0)
    }

    /// `y(s) = 1 + (sigma2 - sigma3) / (rho s + 1/(rho s) - sigma2)`.
    pub fn y_of_s(&self, s: Complex<T>) -> Complex<T> {
        let [_, _, g2, g3] = self.sigma;
        let t = self.rho * s;
        re(T::one()) + re(g2 - g3) / (t + t.inv() - g2)
    }

    /// Joukowsky value `s + 1/s` of the preimages of `x` under `x(s)`.
    pub fn x_inverse_joukowski(&self, x: Complex<T>) -> Complex<T> {
        let [g0, g1, _, _] = self.sigma;
        re(g0) + re(g0 - g1) / (x - T::one())
    }

    /// Joukowsky value `rho s + 1/(rho s)` of the preimages of `y` under `y(s)`.
    pub fn y_inverse_joukowski(&self, y: Complex<T>) -> Complex<T> {
        let [_, _, g2, g3] = self.sigma;
        re(g2) + re(g2 - g3) / (y - T::one())
    }
}

/// Largest deviation from `x(s) = x(1/s)` and `y(s) = y(1/(rho^2 s))`, relative to `max(1, |value|)`.
pub fn involution_check<T: Real>(data: &UniformizationData<T>, n_samples: usize) -> T {
    let mut worst = T::zero();
    let radii = [lit::<T>(0.35), lit(0.7), lit(1.0), lit(1.6), lit(3.1)];
    let rho2 = data.rho * data.rho;
    for &r in &radii {
        for j in 0..n_samples {
            let phi = (T::PI() + T::PI()) * (int::<T>(j as i64) + lit(0.37)) / int::<T>(n_samples as i64);
            let s = Complex::from_polar(r, phi);
            let (a, b) = (data.x_of_s(s), data.x_of_s(s.inv()));
            let (c, d) = (data.y_of_s(s), data.y_of_s((rho2 * s).inv()));
            if a.norm().is_finite() && b.norm().is_finite() {
                worst = worst.max((a - b).norm() / a.norm().max(T::one()));
            }
            if c.norm().is_finite() && d.norm().is_finite() {
                worst = worst.max((c - d).norm() / c.norm().max(T::one()));
            }
        }
    }
    worst
}

fn segment_distance<T: Real>(z: Complex<T>, lo: T, hi: T) -> T {
    let x = z.re.max(lo).min(hi);
    (z - re(x)).norm()
}

/// Checks that `(x(s), y(s))` lies on the kernel zero set and matches sampled curve pairs.
pub fn parametrization_consistency<T: Real>(
    model: &WalkModel<T>,
    data: &UniformizationData<T>,
    samples: &CurveSamples<T>,
) -> Result<ConsistencyReport<T>> {
    let mut max_res = T::zero();
    for &r in &[lit::<T>(0.5), lit(1.0), lit(2.0)] {
        for j in 0..64 {
            let phi = (T::PI() + T::PI()) * (int::<T>(j) + lit(0.21)) / int::<T>(64);
            let s = Complex::from_polar(r, phi);
            let (x, y) = (data.x_of_s(s), data.y_of_s(s));
            let scale = (x.norm() * y.norm()).max(x.norm()).max(y.norm()).max(T::one());
            let k = model.kernel_eval(x, y)?;
            max_res = max_res.max(k.norm() / (scale * scale.max(T::one())));
        }
    }
    let x_inf = (data.x_of_s(re(lit(1e9))) - re(T::one())).norm();
    let mut x_cut = T::zero();
    let mut y_cut = T::zero();
    let edge = Complex::from_polar(T::one(), data.theta);
    for j in 1..=64 {
        let t = int::<T>(j) / int::<T>(64);
        x_cut = x_cut.max(segment_distance(data.x_of_s(re(t)), data.roots.x1, T::one()));
        y_cut = y_cut.max(segment_distance(data.y_of_s(edge * t), data.roots.y1, T::one()));
    }
    let mut pair_dev = T::zero();
    for (x, y) in samples.s1_points.iter().zip(&samples.s2_points) {
        if (x - re(T::one())).norm() < lit(1e-6) {
            continue;
        }
        let j = data.x_inverse_joukowski(*x);
        let root = principal_sqrt(j * j - re(lit::<T>(4.0)));
        let best = [(j + root) / lit::<T>(2.0), (j - root) / lit::<T>(2.0)]
            .iter()
            .map(|&s| (data.y_of_s(s) - y).norm())
            .fold(T::infinity(), |a, b| a.min(b));
        pair_dev = pair_dev.max(best / y.norm().max(T::one()));
    }
    Ok(ConsistencyReport {
        max_kernel_residual: max_res,
        x_at_infinity: x_inf,
        x_cut_deviation: x_cut,
        y_cut_deviation: y_cut,
        curve_pair_deviation: pair_dev,
    })
}

/// `x(s)` in the product form `(s - s1)(s - 1/s1) / ((s - s0)(s - 1/s0))`.
pub fn x_product_form<T: Real>(data: &UniformizationData<T>, s: Complex<T>) -> Complex<T> {
    (s - data.s1) * (s - data.s1.inv()) / ((s - data.s0) * (s - data.s0.inv()))
}

/// `y(s)` in the product form with `rho s` in place of `s`.
pub fn y_product_form<T: Real>(data: &UniformizationData<T>, s: Complex<T>) -> Complex<T> {
    let t = data.rho * s;
    (t - data.s3) * (t - data.s3.inv()) / ((t - data.s2) * (t - data.s2.inv()))
}

/// Complex unit `exp(i a)`.
pub fn cis<T: Real>(a: T) -> Complex<T> {
    cplx(a.cos(), a.sin())
}
