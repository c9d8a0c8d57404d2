//! Pearson chi-square tests used to audit the simulations.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::types::{type_class_size, NType};

/// Largest type class tabulated by the uniformity test.
pub const UNIFORMITY_LIMIT: usize = 10_000;

/// Upper tail of the chi-square law with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    if stat.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(df as f64).expect("positive df").sf(stat)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquare {
    fn from_parts(statistic: f64, df: usize) -> Self {
        Self {
            statistic,
            df,
            p_value: chi_square_sf(statistic, df),
        }
    }

    /// Independent statistics add, as do their degrees of freedom.
    pub fn pooled(parts: &[ChiSquare]) -> Self {
        Self::from_parts(
            parts.iter().map(|c| c.statistic).sum(),
            parts.iter().map(|c| c.df).sum(),
        )
    }
}

/// Goodness of fit of `counts` to `probs`. Cells with zero probability drop
/// out unless they were observed, which makes the statistic infinite.
pub fn goodness_of_fit(counts: &[usize], probs: &[f64]) -> ChiSquare {
    let total: usize = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                stat = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
    }
    ChiSquare::from_parts(stat, cells.saturating_sub(1))
}

/// Independence test on a contingency table, with margins estimated from
/// the table; empty rows and columns are dropped.
pub fn independence(table: &[Vec<usize>]) -> ChiSquare {
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let width = table.first().map_or(0, Vec::len);
    let cols: Vec<usize> = (0..width).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: usize = rows.iter().sum();
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            if rows[i] == 0 || cols[j] == 0 {
                continue;
            }
            let e = rows[i] as f64 * cols[j] as f64 / total as f64;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    let nr = rows.iter().filter(|&&r| r > 0).count();
    let nc = cols.iter().filter(|&&c| c > 0).count();
    ChiSquare::from_parts(stat, nr.saturating_sub(1) * nc.saturating_sub(1))
}

/// Uniformity of encoder outputs over the class of `t`. Every sample must
/// lie in the class; classes larger than [`UNIFORMITY_LIMIT`] are refused.
pub fn lemma2_uniformity_test(t: &NType, samples: &[Vec<usize>]) -> Result<ChiSquare> {
    let size = type_class_size(t).to_usize().unwrap_or(usize::MAX);
    if size > UNIFORMITY_LIMIT {
        return Err(Error::SupportTooLarge {
            size,
            limit: UNIFORMITY_LIMIT,
        });
    }
    let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for s in samples {
        if NType::of_sequence(s, t.len()).ok().as_ref() != Some(t) {
            return Err(Error::InvalidParameter("sample outside the type class".into()));
        }
        *counts.entry(s.as_slice()).or_default() += 1;
    }
    let e = samples.len() as f64 / size as f64;
    // unseen members contribute e each
    let seen: f64 = counts.values().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let stat = seen + (size - counts.len()) as f64 * e;
    Ok(ChiSquare::from_parts(stat, size - 1))
}
