use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{induced_joint, quantizer_output, Alphabet, DeterministicQuantizer, DistortionMatrix, Pmf};
use crate::scalar::Scalar;

/// Largest number of maps `enumerate_maps` will walk.
pub const ENUMERATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellShape {
    /// Every map with at most `M` distinct outputs.
    #[default]
    All,
    /// Maps whose cells are runs of consecutive source indices.
    Interval,
}

/// A deterministic quantizer with its output law and expected cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", bound(serialize = "T: Scalar + Serialize"))]
pub struct QuantizerColumn<T: Scalar> {
    pub quantizer: DeterministicQuantizer,
    pub output_pmf: Pmf<T>,
    pub cost: T,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of maps of the given shape, as a float to survive overflow.
pub fn count_maps(x_size: usize, y_size: usize, m: usize, shape: CellShape) -> f64 {
    match shape {
        CellShape::All => (y_size as f64).powi(x_size as i32),
        CellShape::Interval => (1..=m.min(x_size).min(y_size))
            .map(|j| binomial(x_size - 1, j - 1) * (0..j).map(|i| (y_size - i) as f64).product::<f64>())
            .sum(),
    }
}

/// All maps `0..x_size -> 0..y_size` with at most `m` distinct values, in
/// lexicographic order of the map vector.
pub fn enumerate_maps(x_size: usize, y_size: usize, m: usize, shape: CellShape) -> Result<Vec<DeterministicQuantizer>> {
    if x_size == 0 || y_size == 0 {
        return Err(Error::EmptyAlphabet);
    }
    if m == 0 {
        return Err(Error::ZeroBudget);
    }
    let total = count_maps(x_size, y_size, m, CellShape::All);
    let walked = count_maps(x_size, y_size, m, shape);
    if walked > ENUMERATION_CAP as f64 || (shape == CellShape::All && total > ENUMERATION_CAP as f64) {
        return Err(Error::CapExceeded {
            requested: walked.max(if shape == CellShape::All { total } else { 0.0 }),
            cap: ENUMERATION_CAP as f64,
        });
    }
    let mut out = Vec::new();
    match shape {
        CellShape::All => {
            let mut map = vec![0usize; x_size];
            loop {
                if let Ok(q) = DeterministicQuantizer::new(map.clone(), m, y_size) {
                    out.push(q);
                }
                // odometer, last position fastest
                let Some(pos) = (0..x_size).rev().find(|&p| map[p] + 1 < y_size) else {
                    break;
                };
                map[pos] += 1;
                map[pos + 1..].iter_mut().for_each(|v| *v = 0);
            }
        }
        CellShape::Interval => {
            let mut map = Vec::with_capacity(x_size);
            let mut used = vec![false; y_size];
            interval_maps(x_size, y_size, m, &mut map, &mut used, &mut out);
        }
    }
    Ok(out)
}

fn interval_maps(
    x_size: usize,
    y_size: usize,
    m: usize,
    map: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<DeterministicQuantizer>,
) {
    if map.len() == x_size {
        out.push(DeterministicQuantizer::new(map.clone(), m, y_size).expect("budget respected"));
        return;
    }
    let levels = used.iter().filter(|&&u| u).count();
    for y in 0..y_size {
        // continue the current cell, or open a new one on a fresh output
        let extend = map.last() == Some(&y);
        if !extend && (used[y] || levels == m) {
            continue;
        }
        map.push(y);
        let fresh = !used[y];
        used[y] = true;
        interval_maps(x_size, y_size, m, map, used, out);
        used[y] = !fresh;
        map.pop();
    }
}

/// Columns of the mixture LP: output law and cost of every admissible map.
pub fn enumerate_quantizers<T: Scalar>(
    mu: &Pmf<T>,
    y_alphabet: &Alphabet,
    rho: &DistortionMatrix<T>,
    m: usize,
    shape: CellShape,
) -> Result<Vec<QuantizerColumn<T>>> {
    rho.check_shape(mu.len(), y_alphabet.len())?;
    enumerate_maps(mu.len(), y_alphabet.len(), m, shape)?
        .into_iter()
        .map(|q| column(q, mu, y_alphabet, rho))
        .collect()
}

pub(crate) fn column<T: Scalar>(
    q: DeterministicQuantizer,
    mu: &Pmf<T>,
    y_alphabet: &Alphabet,
    rho: &DistortionMatrix<T>,
) -> Result<QuantizerColumn<T>> {
    let joint = induced_joint(&q, mu, y_alphabet)?;
    let cost = crate::model::distortion(&joint, rho)?;
    let output_pmf = Pmf::new(y_alphabet.clone(), quantizer_output(&q, mu))?;
    Ok(QuantizerColumn {
        quantizer: q,
        output_pmf,
        cost,
    })
}
