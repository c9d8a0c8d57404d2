//! Random coding on type classes: codebooks, nearest-neighbour encoding,
//! the sequential coupling and the Monte Carlo pipelines built on them.

mod codebook;
mod continuous;
mod marton;
mod sim;
mod stats;

pub use codebook::{
    block_cost, codebook_size, effective_rate, generate_codebook, nn_encode, nn_encode_with, Codebook, TieRule,
    CODEBOOK_CAP,
};
pub use continuous::{discretize, Density, Grid};
pub use marton::{marton_bound, marton_conditional, marton_coupling, marton_exact_law};
pub use sim::{
    simulate, simulate_continuous, simulate_finite, simulate_iid_codebook, trial_rng, CouplingMethod, Decomposition,
    SimConfig, SimMode, SimRecord, SimResult, EXACT_COUPLING_LIMIT,
};
pub use stats::{chi_square_sf, goodness_of_fit, independence, lemma2_uniformity_test, ChiSquare, UNIFORMITY_LIMIT};
