use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DistortionMatrix;
use crate::scalar::Scalar;
use crate::types::{sample_uniform_type_class, NType};

/// Default ceiling on the number of codewords.
pub const CODEBOOK_CAP: usize = 1 << 20;

/// Codewords drawn independently and uniformly from one type class.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Codebook {
    pub words: Vec<Vec<usize>>,
    /// `log2(count) / n`, which is at least the requested rate.
    pub rate_bits: f64,
    pub ntype: NType,
}

/// `ceil(2^{n r})`.
pub fn codebook_size(n: usize, rate_bits: f64, cap: usize) -> Result<usize> {
    if !rate_bits.is_finite() || rate_bits < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rate {rate_bits} must be finite and nonnegative"
        )));
    }
    let exact = (n as f64 * rate_bits).exp2();
    // absorb rounding so that integral 2^{nR} is not pushed up by one
    let size = (exact * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0);
    if size > cap as f64 {
        return Err(Error::CapExceeded {
            requested: size,
            cap: cap as f64,
        });
    }
    Ok(size as usize)
}

/// Effective rate of a codebook with `count` words.
pub fn effective_rate(count: usize, n: usize) -> f64 {
    (count as f64).log2() / n as f64
}

pub fn generate_codebook<R: Rng + ?Sized>(t: &NType, rate_bits: f64, cap: usize, rng: &mut R) -> Result<Codebook> {
    let count = codebook_size(t.n(), rate_bits, cap)?;
    Ok(Codebook {
        words: (0..count).map(|_| sample_uniform_type_class(t, rng)).collect(),
        rate_bits: effective_rate(count, t.n()),
        ntype: t.clone(),
    })
}

/// Which of several equally close codewords the encoder reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TieRule {
    #[default]
    SmallestIndex,
    LargestIndex,
}

/// Sum of per-letter costs; divide by `n` for the average.
pub fn block_cost<T: Scalar>(x: &[usize], y: &[usize], rho: &DistortionMatrix<T>) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc + rho.get(a, b).clone())
}

/// Nearest codeword in average distortion; ties go to the smallest index.
pub fn nn_encode<'a, T: Scalar>(
    x: &[usize],
    words: &'a [Vec<usize>],
    rho: &DistortionMatrix<T>,
) -> (usize, &'a [usize]) {
    nn_encode_with(x, words, rho, TieRule::SmallestIndex)
}

pub fn nn_encode_with<'a, T: Scalar>(
    x: &[usize],
    words: &'a [Vec<usize>],
    rho: &DistortionMatrix<T>,
    rule: TieRule,
) -> (usize, &'a [usize]) {
    assert!(!words.is_empty(), "codebook is empty");
    let mut best = 0;
    let mut best_cost = block_cost(x, &words[0], rho);
    for (i, w) in words.iter().enumerate().skip(1) {
        let c = block_cost(x, w, rho);
        let better = match rule {
            TieRule::SmallestIndex => c < best_cost,
            TieRule::LargestIndex => c <= best_cost,
        };
        if better {
            best = i;
            best_cost = c;
        }
    }
    (best, &words[best])
}
