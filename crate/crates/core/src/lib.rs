//! Simulation and stationary-law toolkit for the extended Chiarella
//! mispricing/trend model.
//!
//! The analytic routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the common double-precision choice.

pub mod density;
pub mod empirics;
pub mod error;
pub mod experiments;
pub mod fast_trend;
pub mod io;
pub mod linear;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod sde;
pub mod slow_trend;
pub mod special;
pub mod strong_coupling;

pub use density::{AnalyticDensity, Density1D};
pub use empirics::{EmpiricalDensity, Histogram1D, RawMoments};
pub use error::{ChiarellaError, Result};
pub use model::{
    classify_deterministic_phase, derive_params, predict_modality, Modality, ModalityVerdict, Phase,
    PhaseVerdict, Regime, VerdictSource,
};
pub use scalar::Scalar;
pub use sde::{simulate, InitState, TrajectoryStats};

pub type ModelParams<T = f64> = model::ModelParams<T>;
pub type Params = model::ModelParams<f64>;
pub type Params32 = model::ModelParams<f32>;
pub type DerivedParams = model::DerivedParams<f64>;
pub type DerivedParams32 = model::DerivedParams<f32>;
pub type StationaryCovariance = linear::StationaryCovariance<f64>;
pub type FastTrendMoments = fast_trend::FastTrendMoments<f64>;
pub type StrongCouplingReport = strong_coupling::StrongCouplingReport<f64>;
pub type SimSpec = sde::SimSpec<f64>;
pub type SimSpec32 = sde::SimSpec<f32>;
pub type FullState = sde::FullState<f64>;
pub type ReducedState = sde::ReducedState<f64>;
