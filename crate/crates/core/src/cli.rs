//! `qharm` command line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::conformal_maps::{pole_exponent_check, psi_maps_for, welding_check, FIT_RESIDUAL_TOL};
use crate::continuum::{convergence_diagnostic, write_ratios_csv, LimitOptions, LimitReading, Verdict};
use crate::curve_tracker::{check_k1, sample_curves, write_curves_csv, zero_position};
use crate::error::{QhError, Result};
use crate::harmonic::{
    decompose, extract_table_with, functional_equation_check, laplacian_residual, read_boundary_csv,
    torus_sample_points, write_table_csv, zero_pattern_check, ExtractOptions, DEFAULT_RADIUS,
};
use crate::uniformization::{parametrization_consistency, uniformization_params};
use crate::walk_model::WalkModel;

#[derive(Debug, Parser)]
#[command(name = "qharm", version, about = "Discrete harmonic functions for zero-drift quadrant walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hypothesis checks, angles and uniformization data as JSON.
    Analyze(Common),
    /// Samples of S1 and S2 as CSV, with the K1 report as JSON.
    Curves {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2048)]
        n_samples: usize,
        /// Where to write the K1 report; stderr when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Coefficient table of `h_n` as CSV.
    Build {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Residual, welding, zero-pattern and functional-equation checks as JSON.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 2048)]
        n_samples: usize,
        #[arg(long, default_value_t = 1e-7)]
        laplacian_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        welding_tol: f64,
        #[arg(long, default_value_t = 1e-2)]
        pole_tol: f64,
        #[arg(long, default_value_t = 1e-7)]
        functional_tol: f64,
        /// Torus radius for the functional-equation samples.
        #[arg(long, default_value_t = 0.04)]
        functional_radius: f64,
    },
    /// Coefficients of a boundary-value CSV (`i,j,value`) in the `h_n` basis, as JSON.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: f64,
    },
    /// Scaling-limit diagnostic as JSON.
    Limit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Evaluation point `x,y`; repeatable.
        #[arg(long = "point", value_parser = parse_point, default_values = ["0.5,0.5", "1,2"])]
        points: Vec<(f64, f64)>,
        #[arg(long = "m", value_delimiter = ',', default_values_t = [8u32, 16, 32])]
        m_values: Vec<u32>,
        /// Cone angle; the walk's own angle when absent.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 0.3)]
        contraction: f64,
        #[arg(long, default_value_t = 0.05)]
        constancy: f64,
        #[arg(long, default_value_t = 2.0)]
        exponent_offset: f64,
        #[arg(long, default_value_t = crate::continuum::LAPLACE_ABS_TOL)]
        quad_tol: f64,
        /// Substitute `floor(m x)` into the transform instead of `x / m`.
        #[arg(long)]
        literal: bool,
        /// Compare against the unnormalized continuous transform.
        #[arg(long)]
        no_covariance: bool,
        /// Also write the ratio matrix as CSV.
        #[arg(long)]
        ratios_csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Walk spec `{"weights": [[k, l, p], ...]}`.
    pub input: PathBuf,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Divide the weights by their sum before validating.
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Args)]
pub struct Grid {
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long = "rows", short = 'I', default_value_t = 20)]
    pub rows: usize,
    #[arg(long = "cols", short = 'J', default_value_t = 20)]
    pub cols: usize,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: f64,
    /// FFT samples per circle; derived from the grid when absent.
    #[arg(long)]
    pub m_samples: Option<usize>,
    /// Fail instead of shrinking the radius when a sample lands on a kernel zero.
    #[arg(long)]
    pub no_nudge: bool,
}

impl Grid {
    fn options(&self) -> ExtractOptions<f64> {
        ExtractOptions { radius: self.radius, m_samples: self.m_samples, auto_nudge: !self.no_nudge }
    }
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let x: f64 = a.trim().parse().map_err(|_| format!("bad x in {s:?}"))?;
    let y: f64 = b.trim().parse().map_err(|_| format!("bad y in {s:?}"))?;
    Ok((x, y))
}

/// Parses, optionally renormalizes and validates a walk spec file.
pub fn parse_spec(path: &Path, renormalize: bool) -> Result<WalkModel<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| QhError::Io(format!("{}: {e}", path.display())))?;
    let model = WalkModel::<f64>::from_spec_json(&text)?;
    let model = if renormalize { model.renormalized() } else { model };
    let report = model.validate();
    if !report.all_passed() {
        let lines: Vec<String> = report.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(QhError::Validation(lines.join("; ")));
    }
    Ok(model)
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| QhError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_json(path: &Option<PathBuf>, value: &impl Serialize) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| QhError::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn err_json(e: &QhError) -> serde_json::Value {
    json!({ "error": e.to_string() })
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qharm: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze(c) => analyze(&c),
        Command::Curves { common, n_samples, report } => curves(&common, n_samples, &report),
        Command::Build { common, grid } => {
            let model = parse_spec(&common.input, common.renormalize)?;
            let pair = psi_maps_for(&model)?;
            let table = extract_table_with(&model, &pair, grid.n, grid.rows, grid.cols, &grid.options())?;
            write_table_csv(&table, sink(&common.output)?)?;
            Ok(0)
        }
        Command::Verify {
            common,
            grid,
            n_samples,
            laplacian_tol,
            welding_tol,
            pole_tol,
            functional_tol,
            functional_radius,
        } => {
            let tol = VerifyTolerances { laplacian_tol, welding_tol, pole_tol, functional_tol, functional_radius };
            verify(&common, &grid, n_samples, &tol)
        }
        Command::Decompose { common, boundary, radius } => {
            let model = parse_spec(&common.input, common.renormalize)?;
            let pair = psi_maps_for(&model)?;
            let file = File::open(&boundary).map_err(|e| QhError::Io(format!("{}: {e}", boundary.display())))?;
            let (row, col) = read_boundary_csv(file)?;
            let opts = ExtractOptions { radius, ..ExtractOptions::default() };
            let coeffs = decompose(&model, &pair, &row, &col, &opts)?;
            write_json(
                &common.output,
                &json!({ "case": model.case_tag(), "boundary_len": row.len(), "radius": radius, "coefficients": coeffs }),
            )?;
            Ok(0)
        }
        Command::Limit {
            common,
            n,
            points,
            m_values,
            theta,
            contraction,
            constancy,
            exponent_offset,
            quad_tol,
            literal,
            no_covariance,
            ratios_csv,
        } => {
            let model = parse_spec(&common.input, common.renormalize)?;
            let pair = psi_maps_for(&model)?;
            let theta = match theta {
                Some(t) => t,
                None => model.angle_report()?.theta,
            };
            let opts = LimitOptions {
                reading: if literal { LimitReading::Literal } else { LimitReading::Scaled },
                contraction,
                constancy,
                exponent_offset,
                covariance_normalized: !no_covariance,
                quad_tol,
            };
            let diag = convergence_diagnostic(&model, &pair, theta, n, &points, &m_values, &opts)?;
            write_json(&common.output, &diag)?;
            if let Some(p) = ratios_csv {
                write_ratios_csv(&diag, sink(&Some(p))?)?;
            }
            Ok(match diag.verdict {
                Verdict::Fail => 4,
                _ => 0,
            })
        }
    }
}

fn analyze(c: &Common) -> Result<i32> {
    let text = std::fs::read_to_string(&c.input).map_err(|e| QhError::Io(format!("{}: {e}", c.input.display())))?;
    let model = WalkModel::<f64>::from_spec_json(&text)?;
    let model = if c.renormalize { model.renormalized() } else { model };
    let validation = model.validate();
    let valid = validation.all_passed();
    let angles = model.angle_report();
    let uniformization = if model.is_small_jump() { Some(uniformization_params(&model)) } else { None };
    let report = json!({
        "case": model.case_tag(),
        "validation": validation,
        "moments": model.moments(),
        "angles": angles.as_ref().map_or_else(err_json, |a| json!(a)),
        "theta": angles.as_ref().ok().map(|a| a.theta),
        "uniformization": uniformization.map(|u| u.map_or_else(|e| err_json(&e), |d| json!(d))),
    });
    write_json(&c.output, &report)?;
    Ok(if valid { 0 } else { 2 })
}

fn curves(c: &Common, n_samples: usize, report: &Option<PathBuf>) -> Result<i32> {
    let model = parse_spec(&c.input, c.renormalize)?;
    let samples = sample_curves(&model, n_samples)?;
    write_curves_csv(&samples, sink(&c.output)?)?;
    let k1 = check_k1(&samples);
    let zero = zero_position(&model, &samples);
    let rep = json!({
        "n_samples": n_samples,
        "k1": k1,
        "zero_position": zero.as_ref().map_or_else(err_json, |z| json!(z)),
        "isolated_zero": samples.isolated_zero,
        "diagnostics": samples.diagnostics,
    });
    match report {
        Some(_) => write_json(report, &rep)?,
        None => eprintln!("{}", serde_json::to_string_pretty(&rep).map_err(|e| QhError::Io(e.to_string()))?),
    }
    Ok(if k1.passed { 0 } else { 3 })
}

#[derive(Debug, Clone, Copy, Serialize)]
struct VerifyTolerances {
    laplacian_tol: f64,
    welding_tol: f64,
    pole_tol: f64,
    functional_tol: f64,
    functional_radius: f64,
}

fn verify(c: &Common, grid: &Grid, n_samples: usize, tol: &VerifyTolerances) -> Result<i32> {
    let model = parse_spec(&c.input, c.renormalize)?;
    let samples = sample_curves(&model, n_samples)?;
    let k1 = check_k1(&samples);
    let pair = psi_maps_for(&model)?;
    let angles = model.angle_report()?;
    let table = extract_table_with(&model, &pair, grid.n, grid.rows, grid.cols, &grid.options())?;
    let residual = laplacian_residual(&model, &table)?;
    let welding = welding_check(&pair, &samples, &model)?;
    let pole = pole_exponent_check(&pair, &angles)?;
    let zero = zero_pattern_check(&table, grid.n, model.case_tag());
    let fe = functional_equation_check(&model, &table, &torus_sample_points(tol.functional_radius, 32))?;
    let consistency = uniformization_params(&model).and_then(|u| parametrization_consistency(&model, &u, &samples));
    let checks = [
        ("k1", k1.passed),
        ("laplacian", residual <= tol.laplacian_tol),
        ("welding", welding.max_deviation <= tol.welding_tol),
        ("pole_exponent", pole.within(tol.pole_tol)),
        ("zero_pattern", zero.passed),
        ("functional_equation", fe <= tol.functional_tol),
    ];
    let passed = checks.iter().all(|c| c.1);
    let report = json!({
        "n": grid.n,
        "rows": grid.rows,
        "cols": grid.cols,
        "radius": table.radius,
        "m_samples": table.m_samples,
        "n_samples": n_samples,
        "tolerances": tol,
        "fit_residual_tol": FIT_RESIDUAL_TOL,
        "checks": checks.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "k1": k1,
        "laplacian_residual": residual,
        "extraction_error": table.error_estimate,
        "welding": welding,
        "pole_exponent": pole,
        "zero_pattern": zero,
        "functional_equation": fe,
        "uniformization_consistency": consistency.map_or_else(|e| err_json(&e), |r| json!(r)),
        "passed": passed,
    });
    write_json(&c.output, &report)?;
    Ok(if !k1.passed {
        3
    } else if passed {
        0
    } else {
        4
    })
}

/// Sizes the rayon pool from `QH_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QH_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| QhError::Parse(format!("QH_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| QhError::Numerical(e.to_string()))?;
    }
    Ok(())
}
