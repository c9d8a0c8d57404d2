use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::constrained::ConstrainedInfo;
use crate::error::Result;
use crate::scalar::{Real, Scalar};

/// Slack allowed for analytic points.
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateSource {
    Analytic,
    Simulated,
}

/// A rate-distortion pair, in bits per symbol and distortion units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RateDistortionPoint {
    #[serde(rename = "R")]
    pub rate_bits: f64,
    #[serde(rename = "D")]
    pub distortion: f64,
    /// Block length; `None` for single-letter points.
    pub n: Option<usize>,
    pub source: EstimateSource,
    /// Monte Carlo standard error of `distortion` (zero for analytic points).
    pub stderr: f64,
}

impl RateDistortionPoint {
    pub fn analytic(rate_bits: f64, distortion: f64) -> Self {
        Self {
            rate_bits,
            distortion,
            n: None,
            source: EstimateSource::Analytic,
            stderr: 0.0,
        }
    }

    pub fn simulated(rate_bits: f64, distortion: f64, stderr: f64, n: usize) -> Self {
        Self {
            rate_bits,
            distortion,
            n: Some(n),
            source: EstimateSource::Simulated,
            stderr,
        }
    }

    /// Three standard errors for simulated points.
    pub fn tolerance(&self) -> f64 {
        match self.source {
            EstimateSource::Analytic => ANALYTIC_TOLERANCE,
            EstimateSource::Simulated => 3.0 * self.stderr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConverseReport {
    pub pass: bool,
    /// `D - D(mu, psi, R)`; negative values are below the curve.
    pub margin: f64,
    pub curve_distortion: f64,
    pub tolerance: f64,
}

/// No scheme with output law `psi` per letter reaches distortion below
/// `D(mu, psi, R)` at rate `R`.
pub fn converse_check<T: Real>(point: &RateDistortionPoint, info: &ConstrainedInfo<T>) -> Result<ConverseReport> {
    let curve = Scalar::to_f64(&info.d_curve(T::lit(Float::max(point.rate_bits, 0.0)))?);
    let margin = point.distortion - curve;
    let tolerance = point.tolerance();
    Ok(ConverseReport {
        pass: margin >= -tolerance,
        margin,
        curve_distortion: curve,
        tolerance,
    })
}
