//! Monte Carlo runs of the type-class random coding scheme.
//!
//! Each trial draws `X^n`, encodes it with a codebook drawn uniformly from
//! the class of the closest `n`-type to `psi`, and couples the reproduction
//! with `Y^n ~ psi^n`. Every trial owns a ChaCha8 stream keyed by
//! `(seed, n)` and indexed by the trial number, and results are reduced in
//! trial order, so the output does not depend on the thread count.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{block_cost, codebook_size, effective_rate, nn_encode_with, TieRule, CODEBOOK_CAP};
use super::continuous::{Density, Grid};
use super::marton::{marton_bound, marton_conditional};
use super::stats::{goodness_of_fit, independence, lemma2_uniformity_test, ChiSquare, UNIFORMITY_LIMIT};
use crate::error::{Error, Result};
use crate::info::{converse_check, ConstrainedInfo, ConverseReport, RateDistortionPoint};
use crate::model::{Alphabet, CostSpec, DistortionMatrix, JointPmf, NamedCost, Pmf};
use crate::transport::{draw_index, solve_transport, CouplingSampler};
use crate::types::{closest_ntype, sample_uniform_type_class, type_class_size, NType};

/// Default bound on `|T_n| * |Y|^n` for the exact product-space coupling.
pub const EXACT_COUPLING_LIMIT: usize = 1_000_000;

/// Stream reserved for the shared codebook in fixed-codebook runs.
const CODEBOOK_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    #[default]
    Finite,
    Continuous,
    /// Finite source with codewords drawn i.i.d. from `psi`.
    Iid,
}

fn default_cap() -> usize {
    CODEBOOK_CAP
}

fn default_exact_limit() -> usize {
    EXACT_COUPLING_LIMIT
}

/// Simulation parameters. Finite runs need `mu`, `psi` and `rho`;
/// continuous runs need `source`, `target`, `k` and `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Pmf<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Pmf<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<CostSpec>,
    #[serde(rename = "R")]
    pub rate_bits: f64,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: SimMode,
    /// One codebook per block length shared by all trials.
    #[serde(default)]
    pub fixed_codebook: bool,
    #[serde(default = "default_cap")]
    pub codebook_cap: usize,
    #[serde(default = "default_exact_limit")]
    pub exact_coupling_limit: usize,
    #[serde(default)]
    pub tie_rule: TieRule,
    /// Reference distortion for the gap column; defaults to the
    /// output-constrained distortion-rate value at `R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_distortion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Density>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Density>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

impl SimConfig {
    /// Finite-mode configuration with defaults for everything else.
    pub fn finite(
        mu: Pmf<f64>,
        psi: Pmf<f64>,
        rho: CostSpec,
        rate_bits: f64,
        n_list: Vec<usize>,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            mu: Some(mu),
            psi: Some(psi),
            rho: Some(rho),
            rate_bits,
            n_list,
            trials,
            seed,
            mode: SimMode::Finite,
            fixed_codebook: false,
            codebook_cap: CODEBOOK_CAP,
            exact_coupling_limit: EXACT_COUPLING_LIMIT,
            tie_rule: TieRule::SmallestIndex,
            target_distortion: None,
            source: None,
            target: None,
            k: None,
            levels: None,
        }
    }

    /// Continuous-mode configuration under squared error.
    #[allow(clippy::too_many_arguments)]
    pub fn continuous(
        source: Density,
        target: Density,
        k: f64,
        levels: usize,
        rate_bits: f64,
        n_list: Vec<usize>,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            mu: None,
            psi: None,
            rho: None,
            mode: SimMode::Continuous,
            source: Some(source),
            target: Some(target),
            k: Some(k),
            levels: Some(levels),
            ..Self::finite(
                Pmf::point_mass(Alphabet::indices(1).expect("one point"), 0).expect("point mass"),
                Pmf::point_mass(Alphabet::indices(1).expect("one point"), 0).expect("point mass"),
                CostSpec::Named(NamedCost::Hamming),
                rate_bits,
                n_list,
                trials,
                seed,
            )
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.rate_bits > 0.0 && self.rate_bits.is_finite()) {
            return bad("R must be positive and finite");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("nList must be a nonempty list of positive block lengths");
        }
        match self.mode {
            SimMode::Finite | SimMode::Iid => {
                if self.mu.is_none() || self.psi.is_none() || self.rho.is_none() {
                    return bad("finite mode needs mu, psi and rho");
                }
            }
            SimMode::Continuous => {
                let (Some(s), Some(t), Some(k), Some(l)) = (self.source, self.target, self.k, self.levels) else {
                    return bad("continuous mode needs source, target, k and levels");
                };
                s.validate()?;
                t.validate()?;
                Grid::new(k, l)?;
            }
        }
        Ok(())
    }
}

/// How the reproduction was coupled to the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMethod {
    /// Optimal transport on the product space.
    Exact,
    /// Sequential maximal coupling.
    Marton,
    /// No coupling: the codeword is the output.
    None,
}

/// Per-trial means of the three legs of a continuous run and of the
/// end-to-end squared error, which the norm triangle inequality bounds by
/// `(sqrt a + sqrt b + sqrt c)^2` in every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Decomposition {
    pub source_leg: f64,
    pub source_leg_analytic: f64,
    pub discrete_leg: f64,
    pub target_leg: f64,
    pub target_leg_analytic: f64,
    pub end_to_end: f64,
    pub end_to_end_stderr: f64,
    pub triangle_bound: f64,
    /// Trials in which the end-to-end error exceeded its triangle bound.
    pub triangle_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimRecord {
    pub n: usize,
    pub codebook_size: usize,
    /// `log2(codebook_size) / n`.
    pub rate_bits: f64,
    pub ntype: Option<NType>,
    pub coupling: CouplingMethod,
    /// Mean per-letter distortion between source and output; for continuous
    /// runs, of the discrete leg.
    pub distortion_mean: f64,
    pub distortion_stderr: f64,
    /// `distortion_mean - target`.
    pub distortion_gap: f64,
    /// Empirical law of each output coordinate.
    pub output_pmf: Vec<Vec<f64>>,
    /// Per-coordinate fit to `psi`, pooled over coordinates.
    pub marginal_chi2: ChiSquare,
    /// Independence of output coordinates 0 and 1.
    pub pair_chi2: Option<ChiSquare>,
    /// Uniformity of the reproductions over their type class.
    pub uniformity_chi2: Option<ChiSquare>,
    pub marton_bound: Option<f64>,
    /// Mean per-letter mismatch between reproduction and output.
    pub marton_observed: Option<f64>,
    pub marton_stderr: Option<f64>,
    /// Mean l1 distance between the output type and `psi`.
    pub output_type_l1: f64,
    pub converse: Option<ConverseReport>,
    pub decomposition: Option<Decomposition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimResult {
    pub mode: SimMode,
    /// Requested rate.
    pub rate_bits: f64,
    pub target_distortion: f64,
    pub seed: u64,
    pub trials: usize,
    pub records: Vec<SimRecord>,
}

impl SimResult {
    /// One summary row per block length.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,rate_bits,distortion_mean,distortion_stderr,marginal_chi2_p,uniformity_chi2_p,marton_bound,marton_observed,converse_margin\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.rate_bits,
                r.distortion_mean,
                r.distortion_stderr,
                r.marginal_chi2.p_value,
                opt(r.uniformity_chi2.map(|c| c.p_value)),
                opt(r.marton_bound),
                opt(r.marton_observed),
                opt(r.converse.map(|c| c.margin)),
            );
        }
        out
    }
}

/// Generator of trial `trial` at block length `n`.
pub fn trial_rng(seed: u64, n: usize, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Optimal coupling of the uniform law on a type class with `psi^n`.
struct ExactCoupling {
    index: HashMap<Vec<usize>, usize>,
    sampler: CouplingSampler,
    letters: usize,
    n: usize,
}

impl ExactCoupling {
    fn build(t: &NType, psi: &Pmf<f64>, rho: &DistortionMatrix<f64>) -> Result<Self> {
        let members = class_members(t);
        let (k, n) = (psi.len(), t.n());
        let outputs = k.pow(n as u32);
        let demand: Vec<f64> = (0..outputs)
            .map(|y| digits(y, k, n).iter().map(|&s| psi.mass()[s]).product())
            .collect();
        let supply = vec![1.0 / members.len() as f64; members.len()];
        let mut cost = Vec::with_capacity(members.len() * outputs);
        for x in &members {
            for y in 0..outputs {
                cost.push(block_cost(x, &digits(y, k, n), rho) / n as f64);
            }
        }
        let plan = solve_transport(&supply, &demand, &cost)?;
        let joint = JointPmf::from_parts(
            Alphabet::indices(members.len())?,
            Alphabet::indices(outputs)?,
            plan.flow,
        );
        Ok(Self {
            index: members.into_iter().enumerate().map(|(i, m)| (m, i)).collect(),
            sampler: CouplingSampler::new(&joint),
            letters: k,
            n,
        })
    }

    fn couple<R: Rng + ?Sized>(&self, xhat: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        let row = *self
            .index
            .get(xhat)
            .ok_or_else(|| Error::InvalidParameter("reproduction outside the type class".into()))?;
        Ok(digits(self.sampler.sample(row, rng)?, self.letters, self.n))
    }
}

/// Base-`k` digits of `v`, most significant first.
fn digits(mut v: usize, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for d in out.iter_mut().rev() {
        *d = v % k;
        v /= k;
    }
    out
}

/// Members of a type class in lexicographic order.
fn class_members(t: &NType) -> Vec<Vec<usize>> {
    let mut seq = t.canonical_sequence();
    let mut out = vec![seq.clone()];
    // standard next-permutation walk over a multiset
    loop {
        let Some(i) = (1..seq.len()).rev().find(|&i| seq[i - 1] < seq[i]) else {
            return out;
        };
        let j = (i..seq.len())
            .rev()
            .find(|&j| seq[j] > seq[i - 1])
            .expect("successor exists");
        seq.swap(i - 1, j);
        seq[i..].reverse();
        out.push(seq.clone());
    }
}

/// Encoder, codebook policy and coupling for one block length.
struct Block<'a> {
    n: usize,
    t: NType,
    count: usize,
    psi: &'a Pmf<f64>,
    rho: &'a DistortionMatrix<f64>,
    tie: TieRule,
    shared: Option<Vec<Vec<usize>>>,
    exact: Option<ExactCoupling>,
    iid: bool,
}

impl<'a> Block<'a> {
    fn new(cfg: &SimConfig, n: usize, psi: &'a Pmf<f64>, rho: &'a DistortionMatrix<f64>, iid: bool) -> Result<Self> {
        let t = closest_ntype(psi, n)?;
        let count = codebook_size(n, cfg.rate_bits, cfg.codebook_cap)?;
        let product_size = type_class_size(&t).to_f64().unwrap_or(f64::INFINITY) * (psi.len() as f64).powi(n as i32);
        let exact = if !iid && product_size <= cfg.exact_coupling_limit as f64 {
            Some(ExactCoupling::build(&t, psi, rho)?)
        } else {
            None
        };
        let mut block = Self {
            n,
            t,
            count,
            psi,
            rho,
            tie: cfg.tie_rule,
            shared: None,
            exact,
            iid,
        };
        if cfg.fixed_codebook {
            let mut rng = trial_rng(cfg.seed, n, CODEBOOK_STREAM);
            block.shared = Some(block.draw_codebook(&mut rng));
        }
        Ok(block)
    }

    fn method(&self) -> CouplingMethod {
        match (self.iid, &self.exact) {
            (true, _) => CouplingMethod::None,
            (false, Some(_)) => CouplingMethod::Exact,
            (false, None) => CouplingMethod::Marton,
        }
    }

    fn draw_codebook<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<usize>> {
        (0..self.count)
            .map(|_| {
                if self.iid {
                    (0..self.n).map(|_| draw_index(self.psi.mass(), rng)).collect()
                } else {
                    sample_uniform_type_class(&self.t, rng)
                }
            })
            .collect()
    }

    /// Reproduction and output for one source block.
    fn run<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
        let fresh;
        let words = match &self.shared {
            Some(w) => w,
            None => {
                fresh = self.draw_codebook(rng);
                &fresh
            }
        };
        let xhat = nn_encode_with(x, words, self.rho, self.tie).1.to_vec();
        let y = if self.iid {
            xhat.clone()
        } else if let Some(exact) = &self.exact {
            exact.couple(&xhat, rng)?
        } else {
            marton_conditional(&self.t, self.psi, &xhat, rng)?
        };
        Ok((xhat, y))
    }
}

struct Trial {
    distortion: f64,
    xhat: Vec<usize>,
    y: Vec<usize>,
    legs: Option<[f64; 4]>,
}

fn mean_stderr(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summarize(block: &Block, trials: &[Trial], target: f64, info: Option<&ConstrainedInfo<f64>>) -> Result<SimRecord> {
    let (n, k) = (block.n, block.psi.len());
    let (mean, stderr) = mean_stderr(trials.iter().map(|t| t.distortion));
    let mut counts = vec![vec![0usize; k]; n];
    for t in trials {
        for (i, &s) in t.y.iter().enumerate() {
            counts[i][s] += 1;
        }
    }
    let total = trials.len() as f64;
    let output_pmf = counts
        .iter()
        .map(|c| c.iter().map(|&v| v as f64 / total).collect())
        .collect();
    let parts: Vec<ChiSquare> = counts.iter().map(|c| goodness_of_fit(c, block.psi.mass())).collect();
    let pair_chi2 = (n >= 2).then(|| {
        let mut table = vec![vec![0usize; k]; k];
        for t in trials {
            table[t.y[0]][t.y[1]] += 1;
        }
        independence(&table)
    });
    let uniformity_chi2 = if block.iid
        || type_class_size(&block.t)
            .to_usize()
            .is_none_or(|s| s > UNIFORMITY_LIMIT)
    {
        None
    } else {
        let samples: Vec<Vec<usize>> = trials.iter().map(|t| t.xhat.clone()).collect();
        Some(lemma2_uniformity_test(&block.t, &samples)?)
    };
    let (marton_bound_v, marton_observed, marton_stderr) = if block.iid {
        (None, None, None)
    } else {
        let (m, s) = mean_stderr(
            trials
                .iter()
                .map(|t| t.xhat.iter().zip(&t.y).filter(|(a, b)| a != b).count() as f64 / n as f64),
        );
        (Some(marton_bound(block.psi, n)?), Some(m), Some(s))
    };
    let output_type_l1 = trials
        .iter()
        .map(|t| {
            let ty = NType::of_sequence(&t.y, k).expect("symbols in range");
            ty.counts()
                .iter()
                .zip(block.psi.mass())
                .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
                .sum::<f64>()
        })
        .sum::<f64>()
        / total;
    let rate = effective_rate(block.count, n);
    let converse = match info {
        Some(info) => Some(converse_check(
            &RateDistortionPoint::simulated(rate, mean, stderr, n),
            info,
        )?),
        None => None,
    };
    let decomposition = trials[0].legs.map(|_| {
        let leg = |j: usize| trials.iter().map(|t| t.legs.expect("continuous trial")[j]).sum::<f64>() / total;
        let bound = trials
            .iter()
            .map(|t| {
                let l = t.legs.expect("continuous trial");
                (l[0].sqrt() + l[1].sqrt() + l[2].sqrt()).powi(2)
            })
            .collect::<Vec<_>>();
        let violations = trials
            .iter()
            .zip(&bound)
            .filter(|(t, &b)| t.legs.expect("continuous trial")[3] > b * (1.0 + 1e-12) + 1e-15)
            .count();
        let (e2e, e2e_err) = mean_stderr(trials.iter().map(|t| t.legs.expect("continuous trial")[3]));
        Decomposition {
            source_leg: leg(0),
            source_leg_analytic: f64::NAN,
            discrete_leg: leg(1),
            target_leg: leg(2),
            target_leg_analytic: f64::NAN,
            end_to_end: e2e,
            end_to_end_stderr: e2e_err,
            triangle_bound: bound.iter().sum::<f64>() / total,
            triangle_violations: violations,
        }
    });
    Ok(SimRecord {
        n,
        codebook_size: block.count,
        rate_bits: rate,
        ntype: (!block.iid).then(|| block.t.clone()),
        coupling: block.method(),
        distortion_mean: mean,
        distortion_stderr: stderr,
        distortion_gap: mean - target,
        output_pmf,
        marginal_chi2: ChiSquare::pooled(&parts),
        pair_chi2,
        uniformity_chi2,
        marton_bound: marton_bound_v,
        marton_observed,
        marton_stderr,
        output_type_l1,
        converse,
        decomposition,
    })
}

fn finite_parts(cfg: &SimConfig) -> Result<(Pmf<f64>, Pmf<f64>, DistortionMatrix<f64>)> {
    cfg.validate()?;
    if cfg.mode == SimMode::Continuous {
        return Err(Error::InvalidParameter("configuration is not in finite mode".into()));
    }
    let (mu, psi) = (cfg.mu.clone().expect("validated"), cfg.psi.clone().expect("validated"));
    let rho = cfg
        .rho
        .as_ref()
        .expect("validated")
        .resolve(mu.alphabet(), psi.alphabet())?;
    Ok((mu, psi, rho))
}

fn target_of(cfg: &SimConfig, info: &ConstrainedInfo<f64>) -> Result<f64> {
    match cfg.target_distortion {
        Some(d) => Ok(d),
        None => info.d_curve(cfg.rate_bits),
    }
}

fn run_discrete(
    cfg: &SimConfig,
    mu: &Pmf<f64>,
    psi: &Pmf<f64>,
    rho: &DistortionMatrix<f64>,
    iid: bool,
) -> Result<SimResult> {
    let info = ConstrainedInfo::new(mu, psi, rho)?;
    let target = target_of(cfg, &info)?;
    let mut records = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let block = Block::new(cfg, n, psi, rho, iid)?;
        let trials: Vec<Trial> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(cfg.seed, n, i);
                let x: Vec<usize> = (0..n).map(|_| draw_index(mu.mass(), &mut rng)).collect();
                let (xhat, y) = block.run(&x, &mut rng)?;
                Ok(Trial {
                    distortion: block_cost(&x, &y, rho) / n as f64,
                    xhat,
                    y,
                    legs: None,
                })
            })
            .collect::<Result<_>>()?;
        records.push(summarize(&block, &trials, target, (!iid).then_some(&info))?);
    }
    Ok(SimResult {
        mode: if iid { SimMode::Iid } else { SimMode::Finite },
        rate_bits: cfg.rate_bits,
        target_distortion: target,
        seed: cfg.seed,
        trials: cfg.trials,
        records,
    })
}

/// The type-class scheme on a finite source.
pub fn simulate_finite(cfg: &SimConfig) -> Result<SimResult> {
    let (mu, psi, rho) = finite_parts(cfg)?;
    run_discrete(cfg, &mu, &psi, &rho, false)
}

/// Same pipeline with codewords drawn i.i.d. from `psi` and no coupling
/// step; the codeword is the output.
pub fn simulate_iid_codebook(cfg: &SimConfig) -> Result<SimResult> {
    let (mu, psi, rho) = finite_parts(cfg)?;
    run_discrete(cfg, &mu, &psi, &rho, true)
}

/// Continuous source and target under squared error: discretize, run the
/// finite scheme on the cell labels, and undo the discretization of the
/// output by drawing within its cell.
pub fn simulate_continuous(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    if cfg.mode != SimMode::Continuous {
        return Err(Error::InvalidParameter(
            "configuration is not in continuous mode".into(),
        ));
    }
    let (source, target) = (cfg.source.expect("validated"), cfg.target.expect("validated"));
    let grid = Grid::new(cfg.k.expect("validated"), cfg.levels.expect("validated"))?;
    let labels = grid.alphabet();
    let mu = Pmf::new(labels.clone(), grid.masses(&source))?;
    let psi = Pmf::new(labels.clone(), grid.masses(&target))?;
    let rho = DistortionMatrix::squared_error(&labels, &labels);
    let info = ConstrainedInfo::new(&mu, &psi, &rho)?;
    let target_d = target_of(cfg, &info)?;
    let mut records = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let block = Block::new(cfg, n, &psi, &rho, false)?;
        let trials: Vec<Trial> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(cfg.seed, n, i);
                let xs: Vec<f64> = (0..n).map(|_| source.sample(&mut rng)).collect();
                // step (a): the monotone cell map is the quantile coupling
                let x: Vec<usize> = xs.iter().map(|&v| grid.index(v)).collect();
                let (xhat, y) = block.run(&x, &mut rng)?;
                // step (c): comonotone draw of the output within its cell
                let ys: Vec<f64> = y.iter().map(|&j| grid.sample_in_cell(&target, j, &mut rng)).collect();
                let avg = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>() / n as f64;
                let a = avg(&|i| (xs[i] - grid.label(x[i])).powi(2));
                let b = avg(&|i| (grid.label(x[i]) - grid.label(y[i])).powi(2));
                let c = avg(&|i| (grid.label(y[i]) - ys[i]).powi(2));
                let e = avg(&|i| (xs[i] - ys[i]).powi(2));
                Ok(Trial {
                    distortion: b,
                    xhat,
                    y,
                    legs: Some([a, b, c, e]),
                })
            })
            .collect::<Result<_>>()?;
        let mut record = summarize(&block, &trials, target_d, Some(&info))?;
        if let Some(d) = record.decomposition.as_mut() {
            d.source_leg_analytic = grid.discretization_cost(&source);
            d.target_leg_analytic = grid.discretization_cost(&target);
        }
        records.push(record);
    }
    Ok(SimResult {
        mode: SimMode::Continuous,
        rate_bits: cfg.rate_bits,
        target_distortion: target_d,
        seed: cfg.seed,
        trials: cfg.trials,
        records,
    })
}

/// Dispatch on `cfg.mode`.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    match cfg.mode {
        SimMode::Finite => simulate_finite(cfg),
        SimMode::Continuous => simulate_continuous(cfg),
        SimMode::Iid => simulate_iid_codebook(cfg),
    }
}
