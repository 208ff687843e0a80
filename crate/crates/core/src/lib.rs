//! Numerical construction of orthogonal domain walls between convection roll systems.
//!
//! The reduced six-dimensional amplitude system is solved for its heteroclinic
//! connection `M- -> M+`; the linearized operators along it, the bifurcation
//! coefficients and the resulting wall family are computed from that orbit.

pub mod asymptotics;
pub mod bifurcation;
pub mod error;
pub mod heteroclinic;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams64 = model::ModelParams<f64>;
pub type NormalFormCoeffs64 = model::NormalFormCoeffs<f64>;
pub type ReducedState64 = model::ReducedState<f64>;
pub type PerturbedState64 = model::PerturbedState<f64>;
pub type HeteroclinicSolution64 = heteroclinic::HeteroclinicSolution<f64>;
pub type BifurcationCoefficients64 = bifurcation::BifurcationCoefficients<f64>;
pub type WallFamilySample64 = bifurcation::WallFamilySample<f64>;
