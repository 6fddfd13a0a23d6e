//! Low-rank tensor completion with the tensor trace norm and with the convex
//! envelope of the cardinality of matricization spectra.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`, with `f32` variants suffixed `32`.

pub mod admm;
pub mod cone;
pub mod error;
pub mod gauge;
pub mod io;
pub mod matrix;
pub mod models;
pub mod scalar;
pub mod spectral;
pub mod tensor;

pub use admm::{solve, solve_with, AdmmConfig, AdmmState, IterationRecord, ObservationSet, SolverReport};
pub use error::{Error, Result};
pub use gauge::{GaugeSpec, SubgradConfig};
pub use models::{
    build_counterexample, estimate_alpha, generate_tucker, rmse, tensor_rank, tensor_trace_norm, Certificate,
    CounterexampleSpec, TuckerSpec,
};
pub use scalar::Real;
pub use tensor::{DenseTensor, Matricization, Shape};

/// Exact value of the rank regularizer.
pub type Rational = num_rational::Ratio<usize>;

pub type Tensor = DenseTensor<f64>;
pub type Tensor32 = DenseTensor<f32>;
pub type Matrix = matrix::Matrix<f64>;
pub type Matrix32 = matrix::Matrix<f32>;
pub type Observations = ObservationSet<f64>;
pub type Observations32 = ObservationSet<f32>;
pub type Gauge = GaugeSpec<f64>;
pub type Config = AdmmConfig<f64>;
pub type Report = SolverReport<f64>;
