//! Finite-alphabet distributions, distortions and randomized quantizers.

pub mod dither;
pub mod pmf;
pub mod quantizer;

pub use dither::{dither_demo, DitherMode, UniformQuantizer};
pub use pmf::{
    distortion, output_marginal, product_cost, Alphabet, CostSpec, DistortionMatrix, JointPmf, NamedCost, Pmf,
};
pub use quantizer::{
    induced_joint, mixture_joint, model1_to_model2, model2_to_model1, model2_to_model3, quantizer_output,
    DeterministicQuantizer, FiniteMixtureQuantizer, MixtureComponent, Model1Code, Model2Quantizer,
};
