//! Mutual information, the output-constrained minimum `I_m(mu || psi, D)`,
//! its inverse `D(mu, psi, R)` and the classical `D(mu, R)`. Rates are in
//! bits; internal logarithms are natural.

mod blahut;
mod constrained;
mod converse;
mod sinkhorn;

pub use blahut::{blahut_arimoto, d_classic, BlahutPoint};
pub use constrained::{d_curve, i_min, ConstrainedInfo, IMin, ImCurve, ImSample, Regime, BETA_CAP, DISTORTION_TOL};
pub use converse::{converse_check, ConverseReport, EstimateSource, RateDistortionPoint, ANALYTIC_TOLERANCE};
pub use sinkhorn::{lagrangian_coupling, LagrangianCoupling, SINKHORN_MAX_ITER};

use num_traits::Float;

use crate::model::JointPmf;
use crate::scalar::Real;

/// `I(X; Y)` in bits; empty cells contribute nothing.
pub fn mutual_information<T: Real>(v: &JointPmf<T>) -> T {
    let px = v.x_marginal_masses();
    let py = v.y_marginal_masses();
    let mut total = T::zero();
    for (x, &a) in px.iter().enumerate() {
        for (y, &b) in py.iter().enumerate() {
            let m = *v.get(x, y);
            if m > T::zero() {
                total = total + m * (m / (a * b)).log2();
            }
        }
    }
    Float::max(total, T::zero())
}

/// Binary entropy in bits.
pub fn binary_entropy<T: Real>(p: T) -> T {
    let term = |q: T| if q > T::zero() { -q * q.log2() } else { T::zero() };
    term(p) + term(T::one() - p)
}
