//! Discrete harmonic functions in the quarter plane for zero-drift walks.
//!
//! The pipeline runs from a [`WalkModel`] through the kernel curves
//! ([`curve_tracker`]), the rational parametrization of small-jump kernels
//! ([`uniformization`]) and the conformal maps ([`conformal_maps`]) to generating
//! functions and coefficient tables ([`harmonic`]), with continuum diagnostics in
//! [`continuum`].
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix `f64`.

pub mod conformal_maps;
pub mod continuum;
pub mod curve_tracker;
pub mod error;
pub mod harmonic;
pub mod quadrature;
pub mod scalar;
pub mod uniformization;
pub mod walk_model;

#[doc(hidden)]
pub mod cli;

pub use error::{QhError, Result};
pub use scalar::Real;

pub type WalkModel = walk_model::WalkModel<f64>;
pub type AngleReport = walk_model::AngleReport<f64>;
pub type EtaSamples = curve_tracker::EtaSamples<f64>;
pub type CurveSamples = curve_tracker::CurveSamples<f64>;
pub type UniformizationData = uniformization::UniformizationData<f64>;
pub type ConformalPair = conformal_maps::ConformalPair<f64>;
pub type ShiftFunction = conformal_maps::ShiftFunction<f64>;
pub type HarmonicTable = harmonic::HarmonicTable<f64>;
pub type LimitDiagnostic = continuum::LimitDiagnostic<f64>;
pub type Complex64 = num_complex::Complex<f64>;
