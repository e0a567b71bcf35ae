//! The polynomial family `P_n`, generating functions `H_n` and their coefficient tables.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::conformal_maps::ConformalPair;
use crate::curve_tracker::fmt17;
use crate::error::{QhError, Result};
use crate::scalar::{lit, re, Real};
use crate::walk_model::{CaseTag, WalkModel};

/// Relative kernel magnitude below which [`h_n_eval`] switches to the derivative quotient.
pub const NEAR_ZERO_KERNEL: f64 = 1e-10;
/// Relative kernel magnitude a torus grid point must clear.
pub const MIN_TORUS_KERNEL: f64 = 1e-8;
/// Default torus radius for coefficient extraction.
pub const DEFAULT_RADIUS: f64 = 0.6;
/// Minimum number of torus samples per direction.
pub const MIN_SAMPLES: usize = 256;

/// Monic `P_n` with roots `psi1(0)` (multiplicity `ceil(n/2)`) and `psi2(0)` (`floor(n/2)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialP<T> {
    pub n: u32,
    pub roots: Vec<Complex<T>>,
}

impl<T: Real> PolynomialP<T> {
    /// For `p11 = 0` both roots are taken as `psi1(0)`.
    pub fn new(pair: &ConformalPair<T>, n: u32, case: CaseTag) -> Result<Self> {
        if n == 0 {
            return Err(QhError::Domain("the family starts at n = 1".into()));
        }
        let a = pair.psi1_at_0;
        let b = if case.p11_zero() { a } else { pair.psi2_at_0 };
        let hi = n.div_ceil(2) as usize;
        let roots = (0..n as usize).map(|k| if k < hi { a } else { b }).collect();
        Ok(PolynomialP { n, roots })
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.roots.iter().fold(re(T::one()), |acc, &r| acc * (z - r))
    }

    pub fn derivative(&self, z: Complex<T>) -> Complex<T> {
        let mut total = re(T::zero());
        for skip in 0..self.roots.len() {
            let mut term = re(T::one());
            for (k, &r) in self.roots.iter().enumerate() {
                if k != skip {
                    term *= z - r;
                }
            }
            total += term;
        }
        total
    }

    /// Monomial coefficients, constant term first.
    pub fn coefficients(&self) -> Vec<Complex<T>> {
        let mut c = vec![re(T::one())];
        for &r in &self.roots {
            let mut next = vec![re(T::zero()); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        c
    }
}

/// Evaluator for `H_n(x, y) = (P_n(psi1(x)) - P_n(psi2(y))) / K(x, y)`.
#[derive(Debug, Clone)]
pub struct HnEvaluator<'a, T> {
    pub model: &'a WalkModel<T>,
    pub pair: ConformalPair<T>,
    pub poly: PolynomialP<T>,
}

impl<'a, T: Real> HnEvaluator<'a, T> {
    pub fn new(model: &'a WalkModel<T>, pair: &ConformalPair<T>, n: u32) -> Result<Self> {
        Ok(HnEvaluator { model, pair: *pair, poly: PolynomialP::new(pair, n, model.case_tag())? })
    }

    fn kernel_tolerance(&self, x: Complex<T>, y: Complex<T>) -> T {
        let size = T::one().max(x.norm()).max(y.norm());
        lit::<T>(NEAR_ZERO_KERNEL) * self.model.kernel_scale() * size * size
    }

    pub fn eval(&self, x: Complex<T>, y: Complex<T>) -> Result<Complex<T>> {
        let k = self.model.kernel_eval(x, y)?;
        if k.norm() >= self.kernel_tolerance(x, y) {
            let num = self.poly.eval(self.pair.psi1(x)?) - self.poly.eval(self.pair.psi2(y)?);
            return Ok(num / k);
        }
        let kx = self.model.kernel_dx(x, y)?;
        let nx = self.poly.derivative(self.pair.psi1(x)?) * self.pair.psi1_derivative(x)?;
        if kx.norm() < self.kernel_tolerance(x, y) {
            return Err(QhError::Singularity(format!(
                "kernel and its x-derivative both vanish at ({x}, {y})"
            )));
        }
        Ok(nx / kx)
    }
}

/// One-shot evaluation of `H_n(x, y)`.
pub fn h_n_eval<T: Real>(
    model: &WalkModel<T>,
    pair: &ConformalPair<T>,
    n: u32,
    x: Complex<T>,
    y: Complex<T>,
) -> Result<Complex<T>> {
    HnEvaluator::new(model, pair, n)?.eval(x, y)
}

/// Coefficients `h(i, j)` for `1 <= i <= rows`, `1 <= j <= cols`; zero off the quadrant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicTable<T> {
    /// Family index; 0 for tables not extracted from a single `H_n`.
    pub n: u32,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `values[(i - 1) * cols + (j - 1)]`.
    pub values: Vec<T>,
    pub radius: T,
    pub m_samples: usize,
    /// Estimated absolute error of the worst coefficient.
    pub error_estimate: T,
    /// Largest discarded imaginary part.
    pub max_imag: T,
}

impl<T: Real> HarmonicTable<T> {
    pub fn from_fn(n: u32, rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 1..=rows {
            for j in 1..=cols {
                values.push(f(i, j));
            }
        }
        HarmonicTable {
            n,
            rows,
            cols,
            values,
            radius: T::zero(),
            m_samples: 0,
            error_estimate: T::zero(),
            max_imag: T::zero(),
        }
    }

    /// `Some(0)` off the quadrant, `None` beyond the grid.
    pub fn get(&self, i: i64, j: i64) -> Option<T> {
        if i < 1 || j < 1 {
            return Some(T::zero());
        }
        let (i, j) = (i as usize, j as usize);
        if i > self.rows || j > self.cols {
            return None;
        }
        Some(self.values[(i - 1) * self.cols + (j - 1)])
    }

    /// In-grid value; panics beyond the grid.
    pub fn at(&self, i: usize, j: usize) -> T {
        self.get(i as i64, j as i64).expect("index beyond the table")
    }

    pub fn scale(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `h(i, 1)` for `i = 1..=rows`.
    pub fn boundary_row(&self) -> Vec<T> {
        (1..=self.rows).map(|i| self.at(i, 1)).collect()
    }

    /// `h(1, j)` for `j = 1..=cols`.
    pub fn boundary_col(&self) -> Vec<T> {
        (1..=self.cols).map(|j| self.at(1, j)).collect()
    }

    /// `sum h(i, j) x^(i-1) y^(j-1)` over the grid.
    pub fn truncated_series(&self, x: Complex<T>, y: Complex<T>) -> Complex<T> {
        let mut total = re(T::zero());
        let mut xp = re(T::one());
        for i in 1..=self.rows {
            let mut yp = re(T::one());
            let mut row = re(T::zero());
            for j in 1..=self.cols {
                row += yp * self.at(i, j);
                yp *= y;
            }
            total += row * xp;
            xp *= x;
        }
        total
    }
}

/// Torus sampling options for [`extract_table_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtractOptions<T> {
    pub radius: T,
    /// Samples per direction; defaults to `max(256, 4 max(rows, cols))` rounded to a power of two.
    pub m_samples: Option<usize>,
    /// Retry slightly smaller radii when a grid point lands on the kernel zero set.
    pub auto_nudge: bool,
}

impl<T: Real> Default for ExtractOptions<T> {
    fn default() -> Self {
        ExtractOptions { radius: lit(DEFAULT_RADIUS), m_samples: None, auto_nudge: true }
    }
}

/// Extracts `h_n(i, j)` with default options at the given radius.
pub fn extract_table<T: Real>(
    model: &WalkModel<T>,
    pair: &ConformalPair<T>,
    n: u32,
    rows: usize,
    cols: usize,
    radius: T,
) -> Result<HarmonicTable<T>> {
    let opts = ExtractOptions { radius, ..ExtractOptions::default() };
    extract_table_with(model, pair, n, rows, cols, &opts)
}

fn torus_points<T: Real>(radius: T, m: usize) -> Vec<Complex<T>> {
    let step = (T::PI() + T::PI()) / T::from_usize(m).unwrap();
    (0..m).map(|a| Complex::from_polar(radius, step * T::from_usize(a).unwrap())).collect()
}

fn min_torus_kernel<T: Real>(model: &WalkModel<T>, pts: &[Complex<T>]) -> Result<T> {
    pts.par_iter()
        .map(|&x| {
            pts.iter().try_fold(T::infinity(), |m, &y| Ok(m.min(model.kernel_eval(x, y)?.norm())))
        })
        .try_reduce(T::infinity, |a, b| Ok(a.min(b)))
}

/// Coefficients of `x^(i-1) y^(j-1)` in `H_n` by a 2-D FFT over the torus `|x| = |y| = r`.
pub fn extract_table_with<T: Real>(
    model: &WalkModel<T>,
    pair: &ConformalPair<T>,
    n: u32,
    rows: usize,
    cols: usize,
    opts: &ExtractOptions<T>,
) -> Result<HarmonicTable<T>> {
    if rows == 0 || cols == 0 {
        return Err(QhError::Grid("table needs at least one row and column".into()));
    }
    if !(opts.radius > T::zero() && opts.radius < T::one()) {
        return Err(QhError::Radius(format!("radius {} outside (0, 1)", opts.radius)));
    }
    let m = opts
        .m_samples
        .unwrap_or_else(|| (4 * rows.max(cols)).max(MIN_SAMPLES).next_power_of_two());
    if m < 2 * rows.max(cols) {
        return Err(QhError::Grid(format!("{m} samples cannot resolve a {rows}x{cols} table")));
    }
    let hn = HnEvaluator::new(model, pair, n)?;
    let threshold = lit::<T>(MIN_TORUS_KERNEL) * model.kernel_scale();
    let attempts = if opts.auto_nudge { 8 } else { 1 };
    let mut radius = opts.radius;
    let mut pts = torus_points(radius, m);
    let mut found = false;
    for attempt in 0..attempts {
        if attempt > 0 {
            radius *= T::one() - lit::<T>(1e-3);
            pts = torus_points(radius, m);
        }
        if min_torus_kernel(model, &pts)? > threshold {
            found = true;
            break;
        }
    }
    if !found {
        return Err(QhError::Radius(format!(
            "torus of radius {radius} passes through the kernel zero set; try a smaller radius"
        )));
    }

    let mut grid = vec![re(T::zero()); m * m];
    grid.par_chunks_mut(m).enumerate().try_for_each(|(a, row)| -> Result<()> {
        for (b, slot) in row.iter_mut().enumerate() {
            *slot = hn.eval(pts[a], pts[b]).map_err(|e| match e {
                QhError::Branch(msg) | QhError::Singularity(msg) => {
                    QhError::Radius(format!("{msg}; try a smaller radius"))
                }
                other => other,
            })?;
        }
        Ok(())
    })?;
    fft_2d(&mut grid, m);

    let mm = T::from_usize(m * m).unwrap();
    let lo = m / 2 - m / 8;
    let hi = m / 2 + m / 8;
    let mut noise = T::zero();
    for a in lo..hi {
        for b in lo..hi {
            noise = noise.max(grid[a * m + b].norm() / mm);
        }
    }

    let inv_r = T::one() / radius;
    let mut values = Vec::with_capacity(rows * cols);
    let mut imags = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let c = grid[i * m + j] / mm * inv_r.powi((i + j) as i32);
            values.push(c.re);
            imags.push(c.im);
        }
    }
    let scale = values.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    let mut max_imag = T::zero();
    for (v, im) in values.iter().zip(&imags) {
        max_imag = max_imag.max(im.abs());
        let allowed = lit::<T>(1e-6) * v.abs() + lit::<T>(1e-9) * scale.max(T::one());
        if im.abs() > allowed {
            return Err(QhError::Precision(format!(
                "imaginary part {im:e} of coefficient {v:e} exceeds the noise gate"
            )));
        }
    }
    Ok(HarmonicTable {
        n,
        rows,
        cols,
        values,
        radius,
        m_samples: m,
        error_estimate: noise * inv_r.powi((rows + cols - 2) as i32),
        max_imag,
    })
}

/// Forward 2-D DFT of a row-major `m x m` grid, in place.
fn fft_2d<T: Real>(grid: &mut [Complex<T>], m: usize) {
    let fft = FftPlanner::<T>::new().plan_fft_forward(m);
    fft.process(grid);
    let mut t = vec![re(T::zero()); m * m];
    for a in 0..m {
        for b in 0..m {
            t[b * m + a] = grid[a * m + b];
        }
    }
    fft.process(&mut t);
    for a in 0..m {
        for b in 0..m {
            grid[a * m + b] = t[b * m + a];
        }
    }
}

fn stencil_reach<T: Real>(model: &WalkModel<T>) -> (usize, usize) {
    model.steps().fold((0, 0), |(a, b), ((k, l), _)| (a.max(k.max(0) as usize), b.max(l.max(0) as usize)))
}

/// `sum p h(i + k, j + l) - h(i, j)` at an in-grid point with full stencil coverage.
pub fn laplacian_at<T: Real>(model: &WalkModel<T>, table: &HarmonicTable<T>, i: usize, j: usize) -> Option<T> {
    let mut acc = -table.get(i as i64, j as i64)?;
    for ((k, l), p) in model.steps() {
        acc += p * table.get(i as i64 + k as i64, j as i64 + l as i64)?;
    }
    Some(acc)
}

/// `max |Delta h| / (1 + max |h|)` over grid points with full stencil coverage.
pub fn laplacian_residual<T: Real>(model: &WalkModel<T>, table: &HarmonicTable<T>) -> Result<T> {
    let (dk, dl) = stencil_reach(model);
    if table.rows <= dk || table.cols <= dl {
        return Err(QhError::Grid(format!(
            "a {}x{} table has no point with full stencil coverage",
            table.rows, table.cols
        )));
    }
    let mut worst = T::zero();
    for i in 1..=table.rows - dk {
        for j in 1..=table.cols - dl {
            worst = worst.max(laplacian_at(model, table, i, j).unwrap().abs());
        }
    }
    Ok(worst / (T::one() + table.scale()))
}

/// Outcome of [`zero_pattern_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroPatternReport<T> {
    pub n: u32,
    pub case: CaseTag,
    /// Vanishing and witness tolerance.
    pub tolerance: T,
    /// Largest `|h|` over the region that must vanish.
    pub max_in_zero_region: T,
    pub vanishing_ok: bool,
    /// `(i, j, h(i, j), nonzero)` for each witness inside the grid.
    pub witnesses: Vec<(usize, usize, T, bool)>,
    pub passed: bool,
}

/// Checks the vanishing region and non-vanishing witnesses of `h_n`.
///
/// The tolerance is `1e-7` times the largest `|h|` over `1..=n+2` squared, the window
/// that contains the whole pattern.
pub fn zero_pattern_check<T: Real>(table: &HarmonicTable<T>, n: u32, case: CaseTag) -> ZeroPatternReport<T> {
    let n_us = n as usize;
    let w = (n_us + 2).min(table.rows).max(1);
    let wc = (n_us + 2).min(table.cols).max(1);
    let mut local = T::zero();
    for i in 1..=w {
        for j in 1..=wc {
            local = local.max(table.at(i, j).abs());
        }
    }
    let tolerance = lit::<T>(1e-7) * local;
    let in_zero: Box<dyn Fn(usize, usize) -> bool> = if case.p11_zero() {
        Box::new(move |i, j| i + j <= n_us)
    } else {
        Box::new(move |i, j| i <= n_us / 2 && j <= n_us / 2)
    };
    let mut max_in_zero_region = T::zero();
    for i in 1..=table.rows {
        for j in 1..=table.cols {
            if in_zero(i, j) {
                max_in_zero_region = max_in_zero_region.max(table.at(i, j).abs());
            }
        }
    }
    let cells: Vec<(usize, usize)> = if case.p11_zero() {
        (1..=n_us).map(|i| (i, n_us + 1 - i)).collect()
    } else {
        vec![(n_us / 2 + 1, 1), (1, n_us / 2 + 1)]
    };
    let witnesses: Vec<_> = cells
        .into_iter()
        .filter(|&(i, j)| i <= table.rows && j <= table.cols)
        .map(|(i, j)| {
            let v = table.at(i, j);
            (i, j, v, v.abs() > tolerance)
        })
        .collect();
    let vanishing_ok = max_in_zero_region <= tolerance;
    let passed = vanishing_ok && !witnesses.is_empty() && witnesses.iter().all(|w| w.3);
    ZeroPatternReport { n, case, tolerance, max_in_zero_region, vanishing_ok, witnesses, passed }
}

/// `sum a_n h_n` over a basis of equally sized tables.
pub fn synthesize<T: Real>(coeffs: &[T], basis: &[HarmonicTable<T>]) -> Result<HarmonicTable<T>> {
    if coeffs.len() > basis.len() || basis.is_empty() {
        return Err(QhError::Grid(format!("{} coefficients for {} basis tables", coeffs.len(), basis.len())));
    }
    let (rows, cols) = (basis[0].rows, basis[0].cols);
    if basis.iter().any(|t| t.rows != rows || t.cols != cols) {
        return Err(QhError::Grid("basis tables differ in size".into()));
    }
    let mut out = HarmonicTable::from_fn(0, rows, cols, |_, _| T::zero());
    for (a, t) in coeffs.iter().zip(basis) {
        for (o, v) in out.values.iter_mut().zip(&t.values) {
            *o += *a * *v;
        }
        out.error_estimate += a.abs() * t.error_estimate;
    }
    Ok(out)
}

/// Number of basis functions determined by boundary data of length `len`.
pub fn basis_size(case: CaseTag, len: usize) -> usize {
    if case.p11_zero() {
        len
    } else {
        (2 * len).saturating_sub(1)
    }
}

/// Coefficients of a harmonic function in a given basis `h_1, h_2, ...` from `h(i, 1)`, `h(1, j)`.
pub fn decompose_with_basis<T: Real>(
    case: CaseTag,
    basis: &[HarmonicTable<T>],
    boundary_row: &[T],
    boundary_col: &[T],
) -> Result<Vec<T>> {
    let len = boundary_row.len();
    if len == 0 || boundary_col.len() != len {
        return Err(QhError::Grid("boundary row and column must be non-empty and equally long".into()));
    }
    let m = basis_size(case, len);
    if basis.len() < m || basis.iter().take(m).any(|t| t.rows < len || t.cols < len) {
        return Err(QhError::Grid(format!("need {m} basis tables covering {len}x{len}")));
    }
    let tiny: T = lit(1e-10);
    let mut a = vec![T::zero(); m];
    if case.p11_zero() {
        for i in 1..=len {
            let mut rhs = boundary_row[i - 1];
            for k in 1..i {
                rhs -= a[k - 1] * basis[k - 1].at(i, 1);
            }
            let pivot = basis[i - 1].at(i, 1);
            if pivot.abs() < tiny * basis[i - 1].scale().max(T::min_positive_value()) {
                return Err(QhError::SingularSystem(format!("pivot h_{i}({i}, 1) = {pivot:e}")));
            }
            a[i - 1] = rhs / pivot;
        }
        return Ok(a);
    }
    let pivot = basis[0].at(1, 1);
    if pivot.abs() < tiny * basis[0].scale().max(T::min_positive_value()) {
        return Err(QhError::SingularSystem(format!("pivot h_1(1, 1) = {pivot:e}")));
    }
    a[0] = boundary_row[0] / pivot;
    for i in 1..len {
        let (r, c) = (i + 1, i + 1);
        let mut rhs_r = boundary_row[i];
        let mut rhs_c = boundary_col[i];
        for k in 1..2 * i {
            rhs_r -= a[k - 1] * basis[k - 1].at(r, 1);
            rhs_c -= a[k - 1] * basis[k - 1].at(1, c);
        }
        let (e, o) = (&basis[2 * i - 1], &basis[2 * i]);
        let (m11, m12, m21, m22) = (e.at(r, 1), o.at(r, 1), e.at(1, c), o.at(1, c));
        let det = m11 * m22 - m12 * m21;
        let norm = (m11.hypot(m21) * m12.hypot(m22)).max(T::min_positive_value());
        if det.abs() < tiny * norm {
            return Err(QhError::SingularSystem(format!(
                "2x2 block for (a_{}, a_{}) has determinant {det:e}",
                2 * i,
                2 * i + 1
            )));
        }
        a[2 * i - 1] = (rhs_r * m22 - m12 * rhs_c) / det;
        a[2 * i] = (m11 * rhs_c - m21 * rhs_r) / det;
    }
    Ok(a)
}

/// Extracts the basis `h_1..h_m` on a `len x len` grid and decomposes the boundary data.
pub fn decompose<T: Real>(
    model: &WalkModel<T>,
    pair: &ConformalPair<T>,
    boundary_row: &[T],
    boundary_col: &[T],
    opts: &ExtractOptions<T>,
) -> Result<Vec<T>> {
    let len = boundary_row.len();
    let m = basis_size(model.case_tag(), len);
    let basis = (1..=m as u32)
        .map(|n| extract_basis_table(model, pair, n, len.max(1), opts))
        .collect::<Result<Vec<_>>>()?;
    decompose_with_basis(model.case_tag(), &basis, boundary_row, boundary_col)
}

/// Extraction that retries at `2/3` of the radius, up to [`BASIS_RETRIES`] times, when the
/// imaginary-part gate trips.
fn extract_basis_table<T: Real>(
    model: &WalkModel<T>,
    pair: &ConformalPair<T>,
    n: u32,
    len: usize,
    opts: &ExtractOptions<T>,
) -> Result<HarmonicTable<T>> {
    let mut o = *opts;
    let mut attempt = 0;
    loop {
        match extract_table_with(model, pair, n, len, len, &o) {
            Err(QhError::Precision(_)) if attempt < BASIS_RETRIES => {
                o.radius *= lit(2.0 / 3.0);
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Radius reductions tried per basis table in [`decompose`].
pub const BASIS_RETRIES: usize = 3;

/// `max |K H - K(x,0) H(x,0) - K(0,y) H(0,y) + K(0,0) H(0,0)|` with every `H` summed from
/// the table.
pub fn functional_equation_check<T: Real>(
    model: &WalkModel<T>,
    table: &HarmonicTable<T>,
    points: &[(Complex<T>, Complex<T>)],
) -> Result<T> {
    let zero = re(T::zero());
    let mut worst = T::zero();
    for &(x, y) in points {
        let lhs = model.kernel_eval(x, y)? * table.truncated_series(x, y);
        let rhs = model.kernel_eval(x, zero)? * table.truncated_series(x, zero)
            + model.kernel_eval(zero, y)? * table.truncated_series(zero, y)
            - model.kernel_eval(zero, zero)? * table.truncated_series(zero, zero);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// `count` points `(r e^{i a}, r e^{i b})` spread over the torus.
pub fn torus_sample_points<T: Real>(radius: T, count: usize) -> Vec<(Complex<T>, Complex<T>)> {
    (1..=count)
        .map(|k| {
            let t = T::from_usize(k).unwrap();
            (Complex::from_polar(radius, t), Complex::from_polar(radius, t * lit(2.0)))
        })
        .collect()
}

/// Writes `i,j,value` rows with a header.
pub fn write_table_csv<T: Real, W: Write>(table: &HarmonicTable<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| QhError::Io(e.to_string());
    w.write_record(["i", "j", "value"]).map_err(io)?;
    for i in 1..=table.rows {
        for j in 1..=table.cols {
            w.write_record([i.to_string(), j.to_string(), fmt17(table.at(i, j))]).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `i,j,value` rows into `(h(i, 1), h(1, j))` boundary vectors of equal length.
pub fn read_boundary_csv<R: std::io::Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut row = std::collections::BTreeMap::new();
    let mut col = std::collections::BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| QhError::Parse(e.to_string()))?;
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| QhError::Parse(format!("record {}: missing field {}", line + 2, k + 1)))
        };
        let bad = |what: &str| QhError::Parse(format!("record {}: bad {what}", line + 2));
        let i: usize = field(0)?.parse().map_err(|_| bad("i"))?;
        let j: usize = field(1)?.parse().map_err(|_| bad("j"))?;
        let v: f64 = field(2)?.parse().map_err(|_| bad("value"))?;
        if j == 1 {
            row.insert(i, v);
        }
        if i == 1 {
            col.insert(j, v);
        }
    }
    let len = row.len().min(col.len());
    let take = |m: &std::collections::BTreeMap<usize, f64>| -> Result<Vec<f64>> {
        (1..=len).map(|k| m.get(&k).copied().ok_or_else(|| QhError::Parse(format!("missing index {k}")))).collect()
    };
    if len == 0 {
        return Err(QhError::Parse("no boundary values (rows with i = 1 or j = 1)".into()));
    }
    Ok((take(&row)?, take(&col)?))
}
