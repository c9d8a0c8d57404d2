//! Invariant suite behind `oclab verify`.
//!
//! Each check reduces to one number compared against a tolerance that the
//! config may override by name.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use oclab::coding::{marton_bound, marton_coupling, simulate_finite, trial_rng, SimConfig};
use oclab::info::{binary_entropy, ConstrainedInfo};
use oclab::model::{product_cost, Alphabet, CostSpec, DistortionMatrix, NamedCost, Pmf};
use oclab::optquant::{p1_vs_ot_check, solve_p1, solve_p3, CellShape};
use oclab::transport::Metric;
use oclab::types::{closest_ntype, normalized_type_kl};
use oclab::{ratio, Rational, Scalar};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerifyConfig {
    /// Subset of check names to run; all of them when absent.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    /// Per-check tolerance overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Monte Carlo trials for the sampling checks.
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    20_000
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            checks: None,
            tolerances: BTreeMap::new(),
            trials: default_trials(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,pass,value,tolerance\n");
        for c in &self.checks {
            let _ = writeln!(out, "{},{},{},{}", c.name, c.pass, c.value, c.tolerance);
        }
        out
    }
}

struct Ctx {
    seed: u64,
    trials: usize,
}

/// `(value, pass, detail)` for a given tolerance.
type Outcome = Result<(f64, bool, String), CliError>;

struct Check {
    name: &'static str,
    tolerance: f64,
    run: fn(&Ctx, f64) -> Outcome,
}

const CHECKS: &[Check] = &[
    Check {
        name: "imin-closed-form",
        tolerance: 1e-3,
        run: imin_closed_form,
    },
    Check {
        name: "curve-shape",
        tolerance: 1e-6,
        run: curve_shape,
    },
    Check {
        name: "dcurve-inverse",
        tolerance: 1e-4,
        run: dcurve_inverse,
    },
    Check {
        name: "lp-ot-bridge",
        tolerance: 1e-8,
        run: lp_ot_bridge,
    },
    Check {
        name: "single-level-product-cost",
        tolerance: 0.0,
        run: single_level_product_cost,
    },
    Check {
        name: "p3-monotone",
        tolerance: 1e-9,
        run: p3_monotone,
    },
    Check {
        name: "type-kl-sequence",
        tolerance: 1e-9,
        run: type_kl_sequence,
    },
    Check {
        name: "type-class-uniformity",
        tolerance: 0.01,
        run: type_class_uniformity,
    },
    Check {
        name: "marton-bound",
        tolerance: 3.0,
        run: marton,
    },
    Check {
        name: "output-marginal",
        tolerance: 0.01,
        run: output_marginal,
    },
    Check {
        name: "converse",
        tolerance: 3.0,
        run: converse,
    },
];

/// Names accepted in `checks` and `tolerances`.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

pub fn run_suite(cfg: &VerifyConfig, seed: u64) -> Result<VerifyReport, CliError> {
    let known = check_names();
    let unknown = |n: &String| !known.contains(&n.as_str());
    if let Some(n) = cfg
        .checks
        .iter()
        .flatten()
        .chain(cfg.tolerances.keys())
        .find(|n| unknown(n))
    {
        return Err(CliError::Config(format!(
            "unknown check {n:?}; known: {}",
            known.join(", ")
        )));
    }
    if let Some((n, _)) = cfg.tolerances.iter().find(|(_, t)| t.is_nan()) {
        return Err(CliError::Config(format!("tolerance for {n} is NaN")));
    }
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let ctx = Ctx {
        seed,
        trials: cfg.trials,
    };
    let mut warnings = Vec::new();
    let selected: Vec<&Check> = match &cfg.checks {
        None => CHECKS.iter().collect(),
        Some(names) => CHECKS.iter().filter(|c| names.iter().any(|n| n == c.name)).collect(),
    };
    if selected.is_empty() {
        warnings.push("no checks selected; the suite passes trivially".to_string());
    }
    let mut checks = Vec::with_capacity(selected.len());
    for c in selected {
        let tolerance = cfg.tolerances.get(c.name).copied().unwrap_or(c.tolerance);
        let (value, pass, detail) = (c.run)(&ctx, tolerance)?;
        checks.push(CheckResult {
            name: c.name.to_string(),
            pass,
            value,
            tolerance,
            detail,
        });
    }
    Ok(VerifyReport {
        pass: checks.iter().all(|c| c.pass),
        checks,
        warnings,
    })
}

fn binary_half() -> Pmf<f64> {
    Pmf::from_masses(vec![0.5, 0.5]).expect("valid pmf")
}

fn hamming2() -> DistortionMatrix<f64> {
    let a = Alphabet::indices(2).expect("nonempty");
    DistortionMatrix::hamming(&a, &a)
}

fn random_pmf<R: Rng>(k: usize, rng: &mut R) -> Pmf<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut m: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = m[..k - 1].iter().sum();
    m[k - 1] = 1.0 - head;
    Pmf::from_masses(m).expect("valid pmf")
}

fn random_cost<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DistortionMatrix<f64> {
    DistortionMatrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| 2.0 * rng.random::<f64>()).collect(),
    )
    .expect("valid cost")
}

fn imin_closed_form(_: &Ctx, tol: f64) -> Outcome {
    let info = ConstrainedInfo::new(&binary_half(), &binary_half(), &hamming2())?;
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let d = 0.05 * k as f64;
        let got = info.i_min(d)?.bits;
        worst = worst.max((got - (1.0 - binary_entropy(d))).abs());
    }
    Ok((worst, worst <= tol, "max |I(D) - (1 - h(D))| on D = 0.05..0.45".into()))
}

fn curve_shape(_: &Ctx, tol: f64) -> Outcome {
    let a = Alphabet::new(vec![0.0, 1.0, 2.0])?;
    let mu = Pmf::new(a.clone(), vec![0.2, 0.5, 0.3])?;
    let psi = Pmf::new(a.clone(), vec![0.6, 0.1, 0.3])?;
    let info = ConstrainedInfo::new(&mu, &psi, &DistortionMatrix::squared_error(&a, &a))?;
    let (lo, hi) = (info.feasible_d_min(), info.zero_i_d_max());
    let ds: Vec<f64> = (0..=24).map(|i| lo + (hi - lo) * i as f64 / 24.0).collect();
    let bad = info.curve_on_distortions(&ds)?.check_shape(tol);
    let detail = if bad.is_empty() {
        "monotone and convex on 25 points".to_string()
    } else {
        bad.join("; ")
    };
    Ok((bad.len() as f64, bad.is_empty(), detail))
}

fn dcurve_inverse(ctx: &Ctx, tol: f64) -> Outcome {
    let mut worst: f64 = 0.0;
    for inst in 0..3 {
        let mut rng = trial_rng(ctx.seed, 3, inst);
        let (mu, psi) = (random_pmf(3, &mut rng), random_pmf(3, &mut rng));
        let info = ConstrainedInfo::new(&mu, &psi, &random_cost(3, 3, &mut rng))?;
        let (lo, hi) = (info.feasible_d_min(), info.zero_i_d_max());
        for k in 1..=9 {
            let d = lo + (hi - lo) * k as f64 / 10.0;
            let r = info.i_min(d)?.bits;
            worst = worst.max((info.d_curve(r)? - d).abs());
        }
    }
    Ok((
        worst,
        worst <= tol,
        "max |D(I(D)) - D| over 3 random 3x3 instances".into(),
    ))
}

fn lp_ot_bridge(ctx: &Ctx, tol: f64) -> Outcome {
    let mut worst: f64 = 0.0;
    for inst in 0..10 {
        let mut rng = trial_rng(ctx.seed, 5, inst);
        let (xs, ys) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let (mu, psi) = (random_pmf(xs, &mut rng), random_pmf(ys, &mut rng));
        let rho = random_cost(xs, ys, &mut rng);
        let r = p1_vs_ot_check(&mu, &psi, &rho, ys, tol.max(0.0))?;
        worst = worst.max(r.gap.abs());
    }
    Ok((
        worst,
        worst <= tol,
        "max |P1 - OT| with M = |Y| over 10 random instances".into(),
    ))
}

fn single_level_product_cost(_: &Ctx, tol: f64) -> Outcome {
    let r = |a, b| ratio(a, b);
    let mu = Pmf::from_masses(vec![r(1, 3), r(2, 3)])?;
    let psi = Pmf::from_masses(vec![r(1, 4), r(1, 2), r(1, 4)])?;
    let rho = DistortionMatrix::new(2, 3, vec![r(0, 1), r(1, 2), r(3, 1), r(2, 5), r(1, 1), r(0, 1)])?;
    let p1 = solve_p1(&mu, &psi, &rho, 1, CellShape::All)?
        .objective
        .ok_or_else(|| CliError::Runtime("single-level program has no optimum".into()))?;
    let diff = p1 - product_cost(&mu, &psi, &rho)?;
    let gap = Rational::max_of(&diff, &-diff.clone());
    let pass = Rational::from_f64(tol).is_some_and(|t| gap <= t);
    Ok((
        gap.to_f64(),
        pass,
        "exact |P1(M=1) - E_{mu x psi} rho| in rationals".into(),
    ))
}

fn p3_monotone(_: &Ctx, tol: f64) -> Outcome {
    let a = Alphabet::new(vec![0.0, 1.0, 2.0])?;
    let mu = Pmf::new(a.clone(), vec![0.2, 0.5, 0.3])?;
    let psi = Pmf::new(a.clone(), vec![0.6, 0.1, 0.3])?;
    let rho = DistortionMatrix::squared_error(&a, &a);
    let metric = Metric::absolute(&a);
    let mut worst = f64::NEG_INFINITY;
    let mut last = f64::INFINITY;
    for delta in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8] {
        let v = solve_p3(&mu, &psi, &rho, 2, delta, &metric, CellShape::All)?
            .objective
            .ok_or_else(|| CliError::Runtime(format!("P3 has no optimum at delta {delta}")))?;
        if last.is_finite() {
            worst = worst.max(v - last);
        }
        last = v;
    }
    Ok((
        worst,
        worst <= tol,
        "largest increase of the P3 optimum along a delta sweep".into(),
    ))
}

fn type_kl_sequence(_: &Ctx, tol: f64) -> Outcome {
    let psi = binary_half();
    let ns = [4, 8, 16, 32, 64, 128];
    let seq = ns
        .iter()
        .map(|&n| normalized_type_kl(&psi, n))
        .collect::<oclab::Result<Vec<_>>>()?;
    // uniform class of (2, 2): 6 equiprobable words, each of probability 1/16
    let closed = (4.0 - 6f64.log2()) / 4.0;
    let err = (seq[0].value_bits - closed).abs();
    let decreasing = seq.windows(2).all(|w| w[1].value_bits < w[0].value_bits);
    let sandwich = seq.iter().all(|k| k.sandwich_holds());
    let pass = err <= tol && decreasing && sandwich;
    let detail = format!("value at n=4 vs closed form; decreasing {decreasing}, sandwich {sandwich}");
    Ok((err, pass, detail))
}

/// Fair bits under Hamming distortion, target `D = 0.25` at a rate a quarter
/// bit above the curve.
fn benchmark(ctx: &Ctx, n_list: Vec<usize>) -> SimConfig {
    let mut cfg = SimConfig::finite(
        binary_half(),
        binary_half(),
        CostSpec::Named(NamedCost::Hamming),
        0.4387,
        n_list,
        ctx.trials,
        ctx.seed,
    );
    cfg.target_distortion = Some(0.25);
    cfg
}

fn type_class_uniformity(ctx: &Ctx, tol: f64) -> Outcome {
    let res = simulate_finite(&benchmark(ctx, vec![4]))?;
    let p = res.records[0]
        .uniformity_chi2
        .as_ref()
        .map(|c| c.p_value)
        .ok_or_else(|| CliError::Runtime("uniformity test did not run".into()))?;
    Ok((
        p,
        p > tol,
        "chi-square p-value of encoder outputs on the (2,2) class".into(),
    ))
}

fn marton(ctx: &Ctx, tol: f64) -> Outcome {
    let psi = binary_half();
    let mut worst = f64::NEG_INFINITY;
    for n in [4usize, 8, 16] {
        let t = closest_ntype(&psi, n)?;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for i in 0..ctx.trials as u64 {
            let mut rng = trial_rng(ctx.seed, n, i);
            let (xhat, y) = marton_coupling(&t, &psi, &mut rng)?;
            let m = xhat.iter().zip(&y).filter(|(a, b)| a != b).count() as f64 / n as f64;
            sum += m;
            sq += m * m;
        }
        let k = ctx.trials as f64;
        let mean = sum / k;
        let sd = ((sq / k - mean * mean).max(0.0) * k / (k - 1.0).max(1.0)).sqrt();
        let excess = mean - marton_bound(&psi, n)? - tol * sd / k.sqrt();
        worst = worst.max(excess);
    }
    Ok((
        worst,
        worst <= 0.0,
        "max over n of mismatch - bound - tol * stderr".into(),
    ))
}

fn output_marginal(ctx: &Ctx, tol: f64) -> Outcome {
    let res = simulate_finite(&benchmark(ctx, vec![4, 8]))?;
    let p = res
        .records
        .iter()
        .map(|r| r.marginal_chi2.p_value)
        .fold(f64::INFINITY, f64::min);
    Ok((p, p > tol, "smallest per-coordinate output chi-square p-value".into()))
}

fn converse(ctx: &Ctx, tol: f64) -> Outcome {
    let res = simulate_finite(&benchmark(ctx, vec![4, 8]))?;
    let mut worst = f64::INFINITY;
    for r in &res.records {
        let c = r
            .converse
            .as_ref()
            .ok_or_else(|| CliError::Runtime("converse check did not run".into()))?;
        worst = worst.min(r.distortion_mean - c.curve_distortion + tol * r.distortion_stderr);
    }
    Ok((worst, worst >= 0.0, "min over n of D_hat - D(R) + tol * stderr".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            trials: 2000,
            ..Default::default()
        }
    }

    #[test]
    fn default_suite_passes() {
        let r = run_suite(&quick(), 1).unwrap();
        assert!(r.pass, "{r:#?}");
        assert_eq!(r.checks.len(), CHECKS.len());
    }

    #[test]
    fn empty_selection_warns() {
        let cfg = VerifyConfig {
            checks: Some(vec![]),
            ..quick()
        };
        let r = run_suite(&cfg, 1).unwrap();
        assert!(r.pass && r.checks.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn bad_tolerance_names_the_check() {
        let mut cfg = quick();
        cfg.checks = Some(vec!["imin-closed-form".into(), "lp-ot-bridge".into()]);
        cfg.tolerances.insert("lp-ot-bridge".into(), -1.0);
        let r = run_suite(&cfg, 1).unwrap();
        assert!(!r.pass);
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["lp-ot-bridge"]);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let mut cfg = quick();
        cfg.tolerances.insert("nope".into(), 1.0);
        assert_eq!(run_suite(&cfg, 1).unwrap_err().exit_code(), 2);
    }
}
