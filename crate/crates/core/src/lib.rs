pub mod adaptivity;
pub mod analysis_oracles;
pub mod assembly_solve;
pub mod dense;
pub mod error;
pub mod estimators;
pub mod geometry_mesh;
pub mod polynomial;
pub mod problem_data;
pub mod scalar;
pub mod vem_local;

pub use error::{AvemError, Result};
pub use scalar::Scalar;

pub type Discretization64 = assembly_solve::Discretization<f64>;
pub type Discretization32 = assembly_solve::Discretization<f32>;
pub type LocalOps64 = vem_local::LocalOps<f64>;
pub type LocalOps32 = vem_local::LocalOps<f32>;
pub type IndicatorSet64 = estimators::IndicatorSet<f64>;
pub type IndicatorSet32 = estimators::IndicatorSet<f32>;
pub type PiecewiseData64 = problem_data::PiecewiseData<f64>;
pub type PiecewiseData32 = problem_data::PiecewiseData<f32>;
pub type GalerkinRun64 = adaptivity::GalerkinRun<f64>;
pub type GalerkinRun32 = adaptivity::GalerkinRun<f32>;
