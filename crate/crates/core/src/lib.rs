//! Output-constrained randomized quantization over finite alphabets.
//!
//! Containers and solvers are generic over [`scalar::Scalar`]; the aliases
//! below fix the common choices.

pub mod coding;
pub mod error;
pub mod info;
pub mod model;
pub mod optquant;
pub mod scalar;
pub mod transport;
pub mod types;

pub use error::{Error, Result};
pub use scalar::{ratio, Rational, Real, Scalar};

pub type Pmf64 = model::Pmf<f64>;
pub type Pmf32 = model::Pmf<f32>;
pub type RationalPmf = model::Pmf<Rational>;
pub type JointPmf64 = model::JointPmf<f64>;
pub type RationalJointPmf = model::JointPmf<Rational>;
pub type DistortionMatrix64 = model::DistortionMatrix<f64>;
pub type RationalDistortionMatrix = model::DistortionMatrix<Rational>;
pub type Mixture64 = model::FiniteMixtureQuantizer<f64>;
pub type RationalMixture = model::FiniteMixtureQuantizer<Rational>;
pub type ConstrainedInfo64 = info::ConstrainedInfo<f64>;
