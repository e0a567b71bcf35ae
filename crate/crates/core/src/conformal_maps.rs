//! Generalized Chebyshev functions, the conformal maps `psi1`, `psi2`, welding and
//! shift-function diagnostics.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve_tracker::{refine_eta, track_eta, CurveSamples, TrackCase};
use crate::error::{QhError, Result};
use crate::scalar::{cplx, int, lit, principal_sqrt, re, Real};
use crate::uniformization::UniformizationData;
use crate::walk_model::{AngleReport, Trichotomy, WalkModel};

/// Imaginary clearance below which a point counts as lying on the cut `(-inf, -1)`.
pub const CUT_CLEARANCE: f64 = 1e-12;

/// `T_nu(z) = ((z + sqrt(z^2 - 1))^nu + (z - sqrt(z^2 - 1))^nu) / 2` on `C \ (-inf, -1)`.
pub fn chebyshev_t<T: Real>(nu: T, z: Complex<T>) -> Result<Complex<T>> {
    if nu <= T::zero() {
        return Err(QhError::Domain(format!("order must be positive, got {nu}")));
    }
    if z.re < -T::one() && z.im.abs() <= lit(CUT_CLEARANCE) {
        return Err(QhError::Branch(format!("{z} lies on the cut (-inf, -1)")));
    }
    Ok((log_u(z) * nu).cosh())
}

/// `log(z + sqrt(z - 1) sqrt(z + 1))`, the principal inverse-cosh branch.
fn log_u<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = re(T::one());
    let r = principal_sqrt(z - one) * principal_sqrt(z + one);
    (z + r).ln()
}

/// Classical Chebyshev polynomial by the three-term recurrence.
pub fn chebyshev_classical<T: Real>(n: u32, z: Complex<T>) -> Complex<T> {
    let (mut a, mut b) = (re(T::one()), z);
    if n == 0 {
        return a;
    }
    for _ in 1..n {
        let c = z * b * lit::<T>(2.0) - a;
        a = b;
        b = c;
    }
    b
}

/// Closed-form conformal maps `psi1`, `psi2` of a small-jump walk.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConformalPair<T> {
    /// `pi / theta`
    pub nu: T,
    pub sigma: [T; 4],
    pub psi1_at_0: Complex<T>,
    pub psi2_at_0: Complex<T>,
    /// `2 pi / (theta1 + theta2)`
    pub pole_exponent: T,
}

impl<T: Real> ConformalPair<T> {
    fn check_pole(z: Complex<T>) -> Result<()> {
        if (z - re(T::one())).norm() == T::zero() {
            return Err(QhError::Pole("psi maps send 1 to infinity".into()));
        }
        Ok(())
    }

    fn arg(g_even: T, g_odd: T, z: Complex<T>) -> Complex<T> {
        (z * g_even - g_odd) / ((z - T::one()) * lit::<T>(2.0))
    }

    /// `psi1(z) = 2 T_nu((sigma0 z - sigma1) / (2 (z - 1)))`.
    pub fn psi1(&self, z: Complex<T>) -> Result<Complex<T>> {
        Self::check_pole(z)?;
        Ok(chebyshev_t(self.nu, Self::arg(self.sigma[0], self.sigma[1], z))? * lit::<T>(2.0))
    }

    /// `psi2(z) = -2 T_nu((sigma2 z - sigma3) / (2 (z - 1)))`.
    pub fn psi2(&self, z: Complex<T>) -> Result<Complex<T>> {
        Self::check_pole(z)?;
        Ok(chebyshev_t(self.nu, Self::arg(self.sigma[2], self.sigma[3], z))? * lit::<T>(-2.0))
    }

    fn derivative(&self, g_even: T, g_odd: T, z: Complex<T>) -> Result<Complex<T>> {
        Self::check_pole(z)?;
        let w = Self::arg(g_even, g_odd, z);
        if w.re < -T::one() && w.im.abs() <= lit(CUT_CLEARANCE) {
            return Err(QhError::Branch(format!("{w} lies on the cut (-inf, -1)")));
        }
        let one = re(T::one());
        let r = principal_sqrt(w - one) * principal_sqrt(w + one);
        if r.norm() == T::zero() {
            return Err(QhError::Singularity("derivative of T_nu at a branch point".into()));
        }
        let dt = (log_u(w) * self.nu).sinh() * self.nu / r;
        let dz = z - one;
        let dw = re(g_odd - g_even) / (dz * dz * lit::<T>(2.0));
        Ok(dt * dw * lit::<T>(2.0))
    }

    /// Derivative of `psi1`.
    pub fn psi1_derivative(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.derivative(self.sigma[0], self.sigma[1], z)
    }

    /// Derivative of `psi2`.
    pub fn psi2_derivative(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.derivative(self.sigma[2], self.sigma[3], z).map(|v| -v)
    }
}

/// Builds `psi1`, `psi2` from the uniformization and the corner angles.
pub fn psi_maps<T: Real>(
    model: &WalkModel<T>,
    unif: &UniformizationData<T>,
    angles: &AngleReport<T>,
) -> Result<ConformalPair<T>> {
    if !model.is_small_jump() {
        return Err(QhError::Support("closed-form maps need steps in {-1, 0, 1}^2".into()));
    }
    if angles.trichotomy_class != Some(Trichotomy::BothNonzero) {
        return Err(QhError::Assumption("both corner angles must be nonzero".into()));
    }
    let nu = T::PI() / angles.theta;
    let mut pair = ConformalPair {
        nu,
        sigma: unif.sigma,
        psi1_at_0: re(T::zero()),
        psi2_at_0: re(T::zero()),
        pole_exponent: (T::PI() + T::PI()) / (angles.theta1 + angles.theta2),
    };
    pair.psi1_at_0 = pair.psi1(re(T::zero()))?;
    pair.psi2_at_0 = pair.psi2(re(T::zero()))?;
    Ok(pair)
}

/// Convenience: uniformization, angles and maps in one call.
pub fn psi_maps_for<T: Real>(model: &WalkModel<T>) -> Result<ConformalPair<T>> {
    let unif = crate::uniformization::uniformization_params(model)?;
    let angles = model.angle_report()?;
    psi_maps(model, &unif, &angles)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeldingReport<T> {
    /// Largest `|psi1(X(y)) - psi2(y)| / max(1, |psi1(X(y))|)`.
    pub max_deviation: T,
    pub samples_used: usize,
    pub normal_offset: T,
}

/// Inward offset used to take boundary values.
pub const WELDING_OFFSET: f64 = 1e-7;

/// Compares boundary values of `psi1` on `S1` and `psi2` on `S2` along matched samples.
///
/// Values are limits from the interiors: each map is evaluated at inward normal offsets
/// `delta` and `delta / 2` and extrapolated once.
pub fn welding_check<T: Real>(
    pair: &ConformalPair<T>,
    samples: &CurveSamples<T>,
    model: &WalkModel<T>,
) -> Result<WeldingReport<T>> {
    let n = samples.len();
    let delta: T = lit(WELDING_OFFSET);
    let o1 = T::from_i8(samples.diagnostics.s1_orientation).unwrap_or(T::one());
    let o2 = T::from_i8(samples.diagnostics.s2_orientation).unwrap_or(-T::one());
    let corner = |z: Complex<T>| (z - re(T::one())).norm() < lit(1e-9);
    if let Some(j) = (0..n).find(|&j| !corner(samples.s1_points[j])) {
        let k = model.kernel_eval(samples.s1_points[j], samples.s2_points[j])?;
        if k.norm() > lit(1e-8) {
            return Err(QhError::Inconsistency("curve samples do not belong to this walk".into()));
        }
    }
    let limit = |pts: &[Complex<T>], j: usize, orient: T, f: &dyn Fn(Complex<T>) -> Result<Complex<T>>| {
        let t = pts[(j + 1) % n] - pts[(j + n - 1) % n];
        let normal = cplx(T::zero(), orient) * t / t.norm();
        let a = f(pts[j] + normal * delta)?;
        let b = f(pts[j] + normal * (delta / lit(2.0)))?;
        Ok::<_, QhError>(b * lit::<T>(2.0) - a)
    };
    let devs: Result<Vec<Option<T>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (x, y) = (samples.s1_points[j], samples.s2_points[j]);
            if corner(x) || corner(y) {
                return Ok(None);
            }
            let v1 = limit(&samples.s1_points, j, o1, &|z| pair.psi1(z))?;
            let v2 = limit(&samples.s2_points, j, o2, &|z| pair.psi2(z))?;
            Ok(Some((v1 - v2).norm() / v1.norm().max(T::one())))
        })
        .collect();
    let devs = devs?;
    let used = devs.iter().flatten().count();
    let max_deviation = devs.into_iter().flatten().fold(T::zero(), |a, b| a.max(b));
    Ok(WeldingReport { max_deviation, samples_used: used, normal_offset: delta })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoleFit<T> {
    pub expected: T,
    pub psi1_slope: T,
    pub psi2_slope: T,
    pub psi1_residual: T,
    pub psi2_residual: T,
}

impl<T: Real> PoleFit<T> {
    pub fn within(&self, tol: T) -> bool {
        (self.psi1_slope - self.expected).abs() <= tol && (self.psi2_slope - self.expected).abs() <= tol
    }
}

/// Least-squares slope and rms residual.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = int::<T>(xs.len() as i64);
    let mx = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let mut ss = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - my - slope * (x - mx);
        ss += r * r;
    }
    (slope, (ss / n).sqrt())
}

/// Residual above which a log-log fit is rejected.
pub const FIT_RESIDUAL_TOL: f64 = 5e-2;

/// Fits `log |psi(1 - t)|` against `-log t` for `t` in `[1e-5, 1e-2]`.
pub fn pole_exponent_check<T: Real>(pair: &ConformalPair<T>, angles: &AngleReport<T>) -> Result<PoleFit<T>> {
    let ts: Vec<T> = (0..=24).map(|k| lit::<T>(10.0).powf(lit::<T>(-2.0) - int::<T>(k) / lit(8.0))).collect();
    let xs: Vec<T> = ts.iter().map(|t| -t.ln()).collect();
    let fit = |f: &dyn Fn(Complex<T>) -> Result<Complex<T>>| -> Result<(T, T)> {
        let ys: Result<Vec<T>> = ts.iter().map(|&t| f(re(T::one() - t)).map(|v| v.norm().ln())).collect();
        Ok(linear_fit(&xs, &ys?))
    };
    let (s1, r1) = fit(&|z| pair.psi1(z))?;
    let (s2, r2) = fit(&|z| pair.psi2(z))?;
    if r1 > lit(FIT_RESIDUAL_TOL) || r2 > lit(FIT_RESIDUAL_TOL) {
        return Err(QhError::Fit(format!("log-log residuals {r1}, {r2}")));
    }
    Ok(PoleFit {
        expected: (T::PI() + T::PI()) / (angles.theta1 + angles.theta2),
        psi1_slope: s1,
        psi2_slope: s2,
        psi1_residual: r1,
        psi2_residual: r2,
    })
}

/// `phi(z) = -i (z + 1) / (z - 1)`, unit disk onto the upper half plane.
pub fn phi_mobius<T: Real>(z: Complex<T>) -> Complex<T> {
    cplx(T::zero(), -T::one()) * (z + T::one()) / (z - T::one())
}

/// Inverse of [`phi_mobius`].
pub fn phi_mobius_inverse<T: Real>(w: Complex<T>) -> Complex<T> {
    let i = cplx(T::zero(), T::one());
    (w - i) / (w + i)
}

fn is_weighted_simple<T: Real>(model: &WalkModel<T>) -> bool {
    let want = [((0, 1), 0.375), ((0, -1), 0.375), ((1, 0), 0.125), ((-1, 0), 0.125)];
    model.steps().count() == 4
        && want.iter().all(|&((k, l), p)| (model.weight(k, l) - lit(p)).abs() <= lit(1e-12))
}

/// Closed-form shift function of the weighted simple walk.
pub fn alpha_worked_example<T: Real>(model: &WalkModel<T>, z: T) -> Result<T> {
    if !is_weighted_simple(model) {
        return Err(QhError::Model("closed form known only for p01 = p0-1 = 3/8, p10 = p-10 = 1/8".into()));
    }
    Ok(alpha_closed_form(z))
}

fn alpha_closed_form<T: Real>(z: T) -> T {
    // sqrt(z^2 + 4) - 2 rewritten without cancellation
    let zz = z * z;
    let v = (zz / ((zz + lit(4.0)).sqrt() + lit(2.0))).sqrt();
    if z < T::zero() {
        -v
    } else {
        v
    }
}

/// Closed-form map of `S1+` onto the unit disk for the weighted simple walk.
pub fn worked_pi1<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    let w = (z + T::one()) / (z - T::one()) * -(lit::<T>(3.0).sqrt() / lit(2.0));
    let t = chebyshev_t(lit(1.5), w)? * lit::<T>(2.0);
    Ok((t - T::one()) / (t + T::one()))
}

/// Closed-form map of `S2+` onto the unit disk for the weighted simple walk.
pub fn worked_pi2<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    let w = (z + T::one()) / (z - T::one()) * lit::<T>(-0.5);
    let t = chebyshev_t(lit(3.0), w)? * lit::<T>(2.0);
    Ok((t - T::one()) / (t + T::one()))
}

type ShiftFn<T> = Arc<dyn Fn(T) -> Result<T> + Send + Sync>;

/// Increasing odd homeomorphism of the real line with its growth exponent.
#[derive(Clone)]
pub struct ShiftFunction<T> {
    alpha: ShiftFn<T>,
    pub growth_exponent: T,
    pub label: String,
}

impl<T: Real> std::fmt::Debug for ShiftFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftFunction")
            .field("label", &self.label)
            .field("growth_exponent", &self.growth_exponent)
            .finish()
    }
}

impl<T: Real> ShiftFunction<T> {
    pub fn new(label: &str, growth_exponent: T, f: impl Fn(T) -> Result<T> + Send + Sync + 'static) -> Self {
        ShiftFunction { alpha: Arc::new(f), growth_exponent, label: label.into() }
    }

    pub fn eval(&self, z: T) -> Result<T> {
        (self.alpha)(z)
    }

    pub fn identity() -> Self {
        Self::new("identity", T::one(), Ok)
    }

    /// `sign(x) |x|^p`.
    pub fn power(p: T) -> Self {
        Self::new("power", p, move |x: T| {
            let v = x.abs().powf(p);
            Ok(if x < T::zero() { -v } else { v })
        })
    }

    /// `sign(z) sqrt(sqrt(z^2 + 4) - 2)`, growth exponent `theta2 / theta1 = 1/2`.
    pub fn worked_example() -> Self {
        Self::new("weighted_simple", lit(0.5), |z| Ok(alpha_closed_form(z)))
    }

    /// Shift function `phi o pi1 o X o pi2^-1 o phi^-1 (-z)` from supplied maps of `S1+` and
    /// `S2+` onto the unit disk.
    ///
    /// `pi2` is inverted on `S2` by bisection in the curve parameter; `X` pairs the two
    /// curves through the tracked root.
    pub fn from_riemann_maps<F1, F2>(
        model: &WalkModel<T>,
        pi1: F1,
        pi2: F2,
        growth_exponent: T,
        n_samples: usize,
    ) -> Result<Self>
    where
        F1: Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync + 'static,
        F2: Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync + 'static,
    {
        let eta = track_eta(model, n_samples)?;
        let len = match eta.case {
            TrackCase::P11Zero => n_samples / 2,
            TrackCase::P11Nonzero => n_samples,
        };
        let mut phis = Vec::with_capacity(len);
        let mut etas = Vec::with_capacity(len);
        let mut args = Vec::with_capacity(len);
        let mut last = T::zero();
        let mut offset = T::zero();
        let two_pi = T::PI() + T::PI();
        for j in 1..len {
            let (s, e) = (eta.s_values[j], eta.eta_values[j]);
            let a = pi2(e / s)?.arg();
            let mut u = a + offset;
            while u - last > T::PI() {
                offset -= two_pi;
                u -= two_pi;
            }
            while u - last < -T::PI() {
                offset += two_pi;
                u += two_pi;
            }
            last = u;
            phis.push(eta.phis[j]);
            etas.push(e);
            args.push(u);
        }
        let model = model.clone();
        let f = move |z: T| -> Result<T> {
            let target = phi_mobius_inverse(re(-z)).arg();
            let (lo_a, hi_a) = (args[0].min(args[args.len() - 1]), args[0].max(args[args.len() - 1]));
            let mut tgt = target;
            while tgt < lo_a {
                tgt += two_pi;
            }
            while tgt > hi_a {
                tgt -= two_pi;
            }
            let increasing = args[args.len() - 1] > args[0];
            let idx = args
                .windows(2)
                .position(|w| (w[0] - tgt) * (w[1] - tgt) <= T::zero())
                .ok_or_else(|| QhError::Numerical(format!("no preimage of {z} on S2")))?;
            let (mut lo, mut hi) = (phis[idx], phis[idx + 1]);
            let mut seed = etas[idx];
            let mut unwrap_ref = args[idx];
            let eval = |phi: T, seed: Complex<T>, reference: T| -> Result<(Complex<T>, T)> {
                let s = Complex::from_polar(T::one(), phi);
                let e = refine_eta(&model, s, seed)?;
                let mut a = pi2(e / s)?.arg();
                while a - reference > T::PI() {
                    a -= two_pi;
                }
                while a - reference < -T::PI() {
                    a += two_pi;
                }
                Ok((e, a))
            };
            for _ in 0..60 {
                let mid = (lo + hi) / lit(2.0);
                let (e, a) = eval(mid, seed, unwrap_ref)?;
                seed = e;
                unwrap_ref = a;
                if (a < tgt) == increasing {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let phi = (lo + hi) / lit(2.0);
            let (e, _) = eval(phi, seed, unwrap_ref)?;
            let x = e * Complex::from_polar(T::one(), phi);
            Ok(phi_mobius(pi1(x)?).re)
        };
        Ok(Self::new("riemann_maps", growth_exponent, f))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuasisymmetryBounds<T> {
    /// Smallest ratio `(f(x+t) - f(x)) / (f(x) - f(x-t))` on the grid.
    pub k_min: T,
    /// Largest ratio on the grid.
    pub k_max: T,
    /// `max(k_max, 1 / k_min)`.
    pub k: T,
}

/// Empirical quasisymmetry ratios over `x_grid x t_grid`.
pub fn quasisymmetry_scan<T: Real>(
    alpha: &ShiftFunction<T>,
    x_grid: &[T],
    t_grid: &[T],
) -> Result<QuasisymmetryBounds<T>> {
    let rows: Result<Vec<(T, T)>> = x_grid
        .par_iter()
        .map(|&x| {
            let fx = alpha.eval(x)?;
            let (mut lo, mut hi) = (T::infinity(), T::zero());
            for &t in t_grid {
                let num = alpha.eval(x + t)? - fx;
                let den = fx - alpha.eval(x - t)?;
                if den <= T::zero() || num <= T::zero() {
                    return Err(QhError::Monotonicity(format!("not increasing around x = {x}, t = {t}")));
                }
                let r = num / den;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            Ok((lo, hi))
        })
        .collect();
    let (k_min, k_max) = rows?.into_iter().fold((T::infinity(), T::zero()), |(a, b), (c, d)| (a.min(c), b.max(d)));
    Ok(QuasisymmetryBounds { k_min, k_max, k: k_max.max(k_min.recip()) })
}

/// `n` points evenly spread over `[a, b]`.
pub fn linear_grid<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    (0..n).map(|i| a + (b - a) * int::<T>(i as i64) / int::<T>((n - 1) as i64)).collect()
}

/// `n` log-spaced points over `[a, b]`, `0 < a < b`.
pub fn log_grid<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * int::<T>(i as i64) / int::<T>((n - 1) as i64)).exp()).collect()
}

/// Slope of `log alpha(z)` against `log z` on `[lo, hi]`.
pub fn growth_exponent_fit<T: Real>(alpha: &ShiftFunction<T>, lo: T, hi: T) -> Result<T> {
    let zs = log_grid(lo, hi, 33);
    let xs: Vec<T> = zs.iter().map(|z| z.ln()).collect();
    let ys: Result<Vec<T>> = zs.iter().map(|&z| alpha.eval(z).map(|v| v.ln())).collect();
    Ok(linear_fit(&xs, &ys?).0)
}
