//! Scalar dithered uniform quantizers written as Model 2 tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::pmf::{Alphabet, Pmf};
use crate::model::quantizer::Model2Quantizer;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DitherMode {
    /// `q_u(x + z) - z`
    Subtractive,
    /// `q_u(x + z)`
    Nonsubtractive,
}

/// Uniform `levels`-point quantizer with spacing `step`, centred at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    levels: usize,
    step: f64,
}

impl UniformQuantizer {
    pub fn new(levels: usize, step: f64) -> Result<Self> {
        if levels == 0 {
            return Err(Error::ZeroBudget);
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        Ok(Self { levels, step })
    }

    pub fn level(&self, j: usize) -> f64 {
        (j as f64 - (self.levels as f64 - 1.0) / 2.0) * self.step
    }

    pub fn half_range(&self) -> f64 {
        self.levels as f64 * self.step / 2.0
    }

    /// Nearest level, ties toward the smaller one.
    pub fn quantize(&self, v: f64) -> Result<f64> {
        if !v.is_finite() || v.abs() > self.half_range() * (1.0 + 1e-12) {
            return Err(Error::OutsideGrid(v));
        }
        let t = (v - self.level(0)) / self.step;
        let j = (t - 0.5).ceil().clamp(0.0, self.levels as f64 - 1.0) as usize;
        Ok(self.level(j))
    }
}

fn snap(v: f64) -> f64 {
    (v * 1e12).round() / 1e12 + 0.0
}

/// Model 2 table of a dithered uniform quantizer evaluated on a finite
/// source grid `x_alphabet` with dither values on the alphabet of `nu`.
pub fn dither_demo<T: Scalar>(
    x_alphabet: &Alphabet,
    levels: usize,
    step: f64,
    nu: Pmf<T>,
    mode: DitherMode,
) -> Result<Model2Quantizer<T>> {
    let q = UniformQuantizer::new(levels, step)?;
    let zs = nu.alphabet().points().to_vec();
    let mut raw = Vec::with_capacity(x_alphabet.len());
    for &x in x_alphabet.points() {
        let row = zs
            .iter()
            .map(|&z| {
                let c = q.quantize(x + z)?;
                Ok(snap(match mode {
                    DitherMode::Subtractive => c - z,
                    DitherMode::Nonsubtractive => c,
                }))
            })
            .collect::<Result<Vec<f64>>>()?;
        raw.push(row);
    }
    let mut labels: Vec<f64> = raw.iter().flatten().copied().collect();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    let y_alphabet = Alphabet::new(labels)?;
    let table = raw
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| y_alphabet.position(v).expect("label present"))
                .collect()
        })
        .collect();
    Model2Quantizer::new(table, nu, y_alphabet, levels)
}
