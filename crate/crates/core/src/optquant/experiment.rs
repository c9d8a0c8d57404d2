//! Empirical mixtures of i.i.d. draws from a mixing law over quantizers.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::columns::column;
use crate::coding::trial_rng;
use crate::error::{Error, Result};
use crate::model::{mixture_joint, DistortionMatrix, FiniteMixtureQuantizer, Pmf};
use crate::transport::{draw_index, prokhorov_distance, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RandomizationRow {
    pub size: usize,
    /// Mean of `|L(v_n) - L(v)|` over replicates.
    pub cost_error: f64,
    pub cost_error_stderr: f64,
    /// Mean Prokhorov distance between output laws.
    pub prokhorov: f64,
    pub prokhorov_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RandomizationTable {
    pub target_cost: f64,
    pub rows: Vec<RandomizationRow>,
    /// Least-squares slope of `ln cost_error` against `ln size`; absent when
    /// fewer than two rows have a positive error.
    pub slope: Option<f64>,
}

impl RandomizationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,cost_error,cost_error_stderr,prokhorov,prokhorov_stderr\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.size, r.cost_error, r.cost_error_stderr, r.prokhorov, r.prokhorov_stderr
            );
        }
        out
    }
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `y` on `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// For each size `n`, draw `n` quantizers i.i.d. from the weights of
/// `target`, and compare the uniform mixture over the draws with `target`
/// in expected cost and in the Prokhorov distance between output laws.
/// Replicate `replicates` times per size.
pub fn finite_randomization_experiment(
    target: &FiniteMixtureQuantizer<f64>,
    mu: &Pmf<f64>,
    rho: &DistortionMatrix<f64>,
    metric: &Metric,
    sizes: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<RandomizationTable> {
    if replicates == 0 || sizes.contains(&0) {
        return Err(Error::InvalidParameter("sizes and replicates must be positive".into()));
    }
    let y = target.y_alphabet();
    let cols = target
        .quantizers()
        .iter()
        .map(|q| column(q.clone(), mu, y, rho))
        .collect::<Result<Vec<_>>>()?;
    let target_cost: f64 = target.weights().iter().zip(&cols).map(|(w, c)| w * c.cost).sum();
    let target_out = mixture_joint(target, mu)?.y_marginal();

    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let reps: Vec<(f64, f64)> = (0..replicates as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = trial_rng(seed, size, r);
                let mut hits = vec![0usize; cols.len()];
                for _ in 0..size {
                    hits[draw_index(target.weights(), &mut rng)] += 1;
                }
                let w: Vec<f64> = hits.iter().map(|&h| h as f64 / size as f64).collect();
                let cost: f64 = w.iter().zip(&cols).map(|(w, c)| w * c.cost).sum();
                let mut out = vec![0.0; y.len()];
                for (wi, c) in w.iter().zip(&cols) {
                    for (o, p) in out.iter_mut().zip(c.output_pmf.mass()) {
                        *o += wi * p;
                    }
                }
                let total: f64 = out.iter().sum();
                out.iter_mut().for_each(|o| *o /= total);
                let emp = Pmf::new(y.clone(), out)?;
                let dist = prokhorov_distance(&emp, &target_out, metric)?.distance;
                Ok(((cost - target_cost).abs(), dist))
            })
            .collect::<Result<_>>()?;
        let (errs, dists): (Vec<f64>, Vec<f64>) = reps.into_iter().unzip();
        let (cost_error, cost_error_stderr) = mean_stderr(&errs);
        let (prokhorov, prokhorov_stderr) = mean_stderr(&dists);
        rows.push(RandomizationRow {
            size,
            cost_error,
            cost_error_stderr,
            prokhorov,
            prokhorov_stderr,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.cost_error > 0.0)
        .map(|r| ((r.size as f64).ln(), r.cost_error.ln()))
        .unzip();
    let slope = (xs.len() >= 2).then(|| regression_slope(&xs, &ys));
    Ok(RandomizationTable {
        target_cost,
        rows,
        slope,
    })
}
