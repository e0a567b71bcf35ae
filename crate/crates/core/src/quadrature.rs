//! Adaptive Gauss-Kronrod (7, 15) quadrature in one and two dimensions.

use crate::error::{QhError, Result};
use crate::scalar::{lit, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

/// One G7K15 panel on `[a, b]`.
pub fn gk15<T: Real>(f: &mut impl FnMut(T) -> Result<T>, a: T, b: T) -> Result<Estimate<T>> {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let fc = f(mid)?;
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for i in 0..7 {
        let dx = half * lit(XGK[i]);
        let s = f(mid - dx)? + f(mid + dx)?;
        kronrod += s * lit(WGK[i]);
        if i % 2 == 1 {
            gauss += s * lit(WG[i / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !value.is_finite() {
        return Err(QhError::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Estimate { value, error })
}

/// Relative error floor applied on top of every absolute tolerance; below it the
/// Kronrod-Gauss difference is rounding noise.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Adaptive bisection until the summed error is below `max(abs_tol, 1e-12 |value|)` or
/// `max_panels` is hit.
pub fn integrate<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    abs_tol: T,
    max_panels: usize,
) -> Result<Estimate<T>> {
    let first = gk15(&mut f, a, b)?;
    let mut panels = vec![(a, b, first)];
    loop {
        let (value, error) = panels
            .iter()
            .fold((T::zero(), T::zero()), |(v, e), p| (v + p.2.value, e + p.2.error));
        let magnitude = panels.iter().fold(T::zero(), |m, p| m + p.2.value.abs());
        if error <= abs_tol.max(lit::<T>(ROUNDOFF_FLOOR) * magnitude) {
            return Ok(Estimate { value, error });
        }
        if panels.len() >= max_panels {
            return Err(QhError::Quadrature(format!(
                "error {error:e} above {abs_tol:e} after {max_panels} panels on [{a}, {b}]"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.partial_cmp(&y.1 .2.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi {
            return Err(QhError::Quadrature(format!("panel [{lo}, {hi}] cannot be split further")));
        }
        let left = gk15(&mut f, lo, mid)?;
        let right = gk15(&mut f, mid, hi)?;
        panels.push((lo, mid, left));
        panels.push((mid, hi, right));
    }
}

/// Sums [`integrate`] over consecutive breakpoints, splitting the tolerance evenly.
pub fn integrate_pieces<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    breaks: &[T],
    abs_tol: T,
    max_panels: usize,
) -> Result<Estimate<T>> {
    let pieces = T::from_usize(breaks.len().saturating_sub(1).max(1)).unwrap();
    let mut total = Estimate { value: T::zero(), error: T::zero() };
    for w in breaks.windows(2) {
        let e = integrate(&mut f, w[0], w[1], abs_tol / pieces, max_panels)?;
        total.value += e.value;
        total.error += e.error;
    }
    Ok(total)
}

/// Iterated integral over the product of two breakpoint lists.
///
/// The inner tolerance is a tenth of the outer one scaled by the outer interval length.
pub fn integrate_2d<T: Real>(
    f: impl Fn(T, T) -> Result<T>,
    u_breaks: &[T],
    v_breaks: &[T],
    abs_tol: T,
    max_panels: usize,
) -> Result<Estimate<T>> {
    let span = *u_breaks.last().unwrap() - u_breaks[0];
    let inner_tol = abs_tol / (span * lit(10.0)).max(T::one());
    let mut inner_err = T::zero();
    let outer = integrate_pieces(
        |u| {
            let e = integrate_pieces(|v| f(u, v), v_breaks, inner_tol, max_panels)?;
            inner_err = inner_err.max(e.error);
            Ok(e.value)
        },
        u_breaks,
        abs_tol,
        max_panels,
    )?;
    Ok(Estimate { value: outer.value, error: outer.error + inner_err * span })
}

/// Breakpoints `0, s, 2s, 4s, ...` up to `limit`, for integrands decaying like `exp(-u / s)`.
pub fn geometric_breaks<T: Real>(scale: T, limit: T) -> Vec<T> {
    let mut out = vec![T::zero()];
    let mut b = scale;
    while b < limit {
        out.push(b);
        b = b + b;
    }
    out.push(limit);
    out
}
