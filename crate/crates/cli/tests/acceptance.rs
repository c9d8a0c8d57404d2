//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are printed even when everything passes.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use oclab::coding::{marton_bound, marton_coupling, marton_exact_law, simulate_finite, trial_rng, SimConfig};
use oclab::info::{i_min, ConstrainedInfo};
use oclab::model::{product_cost, Alphabet, CostSpec, DistortionMatrix, FiniteMixtureQuantizer, NamedCost, Pmf};
use oclab::optquant::{enumerate_quantizers, finite_randomization_experiment, solve_p1, CellShape};
use oclab::transport::{ot_solve, Metric};
use oclab::types::{normalized_type_kl, NType};
use oclab::{ratio, Rational};
use rand::Rng;

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn half() -> Pmf<f64> {
    Pmf::from_masses(vec![0.5, 0.5]).unwrap()
}

fn hamming2() -> DistortionMatrix<f64> {
    let a = Alphabet::indices(2).unwrap();
    DistortionMatrix::hamming(&a, &a)
}

fn random_pmf<R: Rng>(k: usize, rng: &mut R) -> Pmf<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut m: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = m[..k - 1].iter().sum();
    m[k - 1] = 1.0 - head;
    Pmf::from_masses(m).unwrap()
}

fn random_cost<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DistortionMatrix<f64> {
    DistortionMatrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| 2.0 * rng.random::<f64>()).collect(),
    )
    .unwrap()
}

/// Mutual information in bits of the symmetric coupling
/// `[[a, 1/2 - a], [1/2 - a, a]]` of two fair bits.
fn symmetric_mi(a: f64) -> f64 {
    let cell = |m: f64| if m > 0.0 { m * (m / 0.25).log2() } else { 0.0 };
    2.0 * cell(a) + 2.0 * cell(0.5 - a)
}

fn c1_closed_form() -> Verdict {
    let ds: Vec<f64> = (1..=9).map(|k| 0.05 * k as f64).collect();
    let start = Instant::now();
    let got: Vec<f64> = ds
        .iter()
        .map(|&d| i_min(&half(), &half(), &hamming2(), d).unwrap().bits)
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    // oracle: scan the one-parameter polytope; distortion is 1 - 2a
    let steps = 500_000;
    let mut closed_err: f64 = 0.0;
    let mut oracle_err: f64 = 0.0;
    for (&d, &i) in ds.iter().zip(&got) {
        let oracle = (0..=steps)
            .map(|k| 0.5 * k as f64 / steps as f64)
            .filter(|&a| 1.0 - 2.0 * a <= d + 1e-12)
            .map(symmetric_mi)
            .fold(f64::INFINITY, f64::min);
        closed_err = closed_err.max((i - (1.0 - h2(d))).abs());
        oracle_err = oracle_err.max((i - oracle).abs());
    }
    let pass = closed_err <= 1e-3 && oracle_err <= 1e-4 && elapsed < 1.0;
    (
        pass,
        format!("closed-form err {closed_err:.2e}, oracle err {oracle_err:.2e}, {elapsed:.3}s"),
    )
}

fn c2_inverse() -> Verdict {
    let mut worst: f64 = 0.0;
    for inst in 0..3 {
        let mut rng = trial_rng(2024, 3, inst);
        let (mu, psi) = (random_pmf(3, &mut rng), random_pmf(3, &mut rng));
        let info = ConstrainedInfo::new(&mu, &psi, &random_cost(3, 3, &mut rng)).unwrap();
        let (lo, hi) = (info.feasible_d_min(), info.zero_i_d_max());
        for k in 1..=9 {
            let d = lo + (hi - lo) * k as f64 / 10.0;
            let r = info.i_min(d).unwrap().bits;
            worst = worst.max((info.d_curve(r).unwrap() - d).abs());
        }
    }
    (worst <= 1e-4, format!("max |D(I(D)) - D| = {worst:.2e} over 27 points"))
}

fn c3_bridge() -> Verdict {
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let mut rng = trial_rng(77, 5, inst);
        let (xs, ys) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let (mu, psi) = (random_pmf(xs, &mut rng), random_pmf(ys, &mut rng));
        let rho = random_cost(xs, ys, &mut rng);
        let m = ys + rng.random_range(0..=1);
        let p1 = solve_p1(&mu, &psi, &rho, m, CellShape::All).unwrap().objective.unwrap();
        let ot = ot_solve(&mu, &psi, &rho).unwrap().cost;
        worst = worst.max((p1 - ot).abs());
    }
    // single level, exact arithmetic, oracle summed by hand
    let r = |a, b| ratio(a, b);
    let mu = Pmf::from_masses(vec![r(1, 3), r(1, 6), r(1, 2)]).unwrap();
    let psi = Pmf::from_masses(vec![r(2, 5), r(3, 5)]).unwrap();
    let cost = vec![r(0, 1), r(7, 4), r(1, 2), r(1, 3), r(5, 1), r(0, 1)];
    let rho = DistortionMatrix::new(3, 2, cost.clone()).unwrap();
    let mut oracle = r(0, 1);
    for x in 0..3 {
        for y in 0..2 {
            oracle += mu.mass()[x].clone() * psi.mass()[y].clone() * cost[x * 2 + y].clone();
        }
    }
    let p1: Rational = solve_p1(&mu, &psi, &rho, 1, CellShape::All).unwrap().objective.unwrap();
    let exact = p1 == oracle && p1 == product_cost(&mu, &psi, &rho).unwrap();
    (
        worst <= 1e-8 && exact,
        format!("max |P1 - OT| = {worst:.2e} over 20 instances; M=1 gives {p1} = {oracle}: {exact}"),
    )
}

fn c4_type_kl() -> Verdict {
    let ns = [4usize, 8, 16, 32, 64, 128];
    let seq: Vec<_> = ns.iter().map(|&n| normalized_type_kl(&half(), n).unwrap()).collect();
    let values: Vec<f64> = seq.iter().map(|k| k.value_bits).collect();
    let at4 = (values[0] - 0.35376).abs() <= 5e-6;
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let last = *values.last().unwrap();
    // the closest type is exact, so the sandwich is [0, 2 log2(n+1) / n]
    let sandwich = seq.iter().all(|k| {
        k.sandwich_holds() && k.value_bits >= 0.0 && k.value_bits <= 2.0 * ((k.n + 1) as f64).log2() / k.n as f64
    });
    (
        at4 && decreasing && last < 0.06 && sandwich,
        format!(
            "n=4 {:.5}, n=128 {last:.5}, decreasing {decreasing}, sandwich {sandwich}",
            values[0]
        ),
    )
}

/// Target `D = 0.25` at `R = 1 - h(0.25) + 0.25`, a quarter bit above the curve.
fn benchmark(n_list: Vec<usize>, trials: usize, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::finite(
        half(),
        half(),
        CostSpec::Named(NamedCost::Hamming),
        0.4387,
        n_list,
        trials,
        seed,
    );
    cfg.target_distortion = Some(0.25);
    cfg
}

fn c5_uniformity() -> Verdict {
    let res = simulate_finite(&benchmark(vec![4], 100_000, 5)).unwrap();
    let rec = &res.records[0];
    let class = rec.ntype.as_ref().map(|t| t.counts().to_vec());
    let chi = rec.uniformity_chi2.as_ref().unwrap();
    let pass = class == Some(vec![2, 2]) && chi.p_value > 0.01;
    (
        pass,
        format!("class {class:?}, chi2 {:.3}, p = {:.4}", chi.statistic, chi.p_value),
    )
}

fn c6_marton() -> Verdict {
    let psi = half();
    let runs = 100_000u64;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [4usize, 8, 16] {
        let t = NType::new(vec![n / 2, n / 2]).unwrap();
        let mut hits = Vec::with_capacity(runs as usize);
        for i in 0..runs {
            let mut rng = trial_rng(6, n, i);
            let (xhat, y) = marton_coupling(&t, &psi, &mut rng).unwrap();
            hits.push(xhat.iter().zip(&y).filter(|(a, b)| a != b).count() as f64 / n as f64);
        }
        let mean = hits.iter().sum::<f64>() / runs as f64;
        let var = hits.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let sigma = (var / runs as f64).sqrt();
        // KL of the uniform class law from the product: n bits - log2 C(n, n/2)
        let log2_binom: f64 = (1..=n / 2).map(|k| ((n / 2 + k) as f64 / k as f64).log2()).sum();
        let kl_nats = (n as f64 - log2_binom) * std::f64::consts::LN_2;
        let bound = (kl_nats / (2.0 * n as f64)).sqrt();
        let lib_bound = marton_bound(&psi, n).unwrap();
        ok &= mean <= bound + 3.0 * sigma && (bound - lib_bound).abs() < 1e-12;
        parts.push(format!("n={n} {mean:.4} <= {bound:.4}"));
    }
    // n = 2: the output law is exactly psi^2 on all four words
    let exact = {
        let r = |a, b| ratio(a, b);
        let psi_q = Pmf::from_masses(vec![r(1, 2), r(1, 2)]).unwrap();
        let law = marton_exact_law(&NType::new(vec![1, 1]).unwrap(), &psi_q).unwrap();
        let mut out = std::collections::BTreeMap::<Vec<usize>, Rational>::new();
        for ((_, y), p) in law {
            *out.entry(y).or_insert_with(|| r(0, 1)) += p;
        }
        out.len() == 4 && out.values().all(|p| *p == r(1, 4))
    };
    ok &= exact;
    parts.push(format!("n=2 exact psi^2 {exact}"));
    (ok, parts.join(", "))
}

fn c7_benchmark() -> Verdict {
    let start = Instant::now();
    let res = simulate_finite(&benchmark(vec![4, 8, 12, 16], 10_000, 42)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let gaps: Vec<f64> = res.records.iter().map(|r| r.distortion_gap).collect();
    let violations = gaps.windows(2).filter(|w| w[1] > w[0]).count();
    let min_p = res
        .records
        .iter()
        .map(|r| r.marginal_chi2.p_value)
        .fold(f64::INFINITY, f64::min);
    let converse = res.records.iter().all(|r| r.converse.as_ref().is_some_and(|c| c.pass));
    let target_ok = res.target_distortion == 0.25 && (1.0 - h2(0.25) + 0.25 - 0.4387).abs() < 1e-4;
    let pass = violations <= 1 && min_p > 0.01 && converse && target_ok && elapsed < 120.0;
    let gaps: Vec<String> = gaps.iter().map(|g| format!("{g:.4}")).collect();
    (
        pass,
        format!(
            "gaps to D=0.25 [{}], {violations} violations, min p {min_p:.3}, converse {converse}, {elapsed:.2}s",
            gaps.join(" ")
        ),
    )
}

fn c8_randomization() -> Verdict {
    let a = Alphabet::new(vec![0.0, 1.0, 2.0]).unwrap();
    let mu = Pmf::<f64>::from_masses(vec![0.3, 0.4, 0.3]).unwrap();
    let rho = DistortionMatrix::squared_error(&a, &a);
    let cols = enumerate_quantizers(&mu, &a, &rho, 3, CellShape::All).unwrap();
    let pick = |map: &[usize]| {
        cols.iter()
            .find(|c| c.quantizer.map() == map)
            .unwrap()
            .quantizer
            .clone()
    };
    let target =
        FiniteMixtureQuantizer::new(a.clone(), vec![0.4, 0.6], vec![pick(&[0, 1, 2]), pick(&[1, 1, 1])]).unwrap();
    let sizes = [10, 100, 1000, 10_000];
    let table = finite_randomization_experiment(&target, &mu, &rho, &Metric::absolute(&a), &sizes, 400, 8).unwrap();
    let slope = table.slope.unwrap_or(f64::NAN);
    let prok: Vec<f64> = table.rows.iter().map(|r| r.prokhorov).collect();
    let decreasing = prok.windows(2).all(|w| w[1] < w[0]);
    let prok: Vec<String> = prok.iter().map(|p| format!("{p:.4}")).collect();
    (
        (slope + 0.5).abs() <= 0.15 && decreasing,
        format!("slope {slope:.3}, mean Prokhorov [{}]", prok.join(" ")),
    )
}

fn run_simulate(config: &Path, out: &Path, threads: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_oclab"))
        .args(["simulate", "--config"])
        .arg(config)
        .env("OCLAB_THREADS", threads)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("exit {status}"));
    }
    let csv = std::fs::read(out).map_err(|e| e.to_string())?;
    let json = std::fs::read(out.with_extension("json")).map_err(|e| e.to_string())?;
    Ok((csv, json))
}

fn c9_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (k, threads) in ["1", "1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}.csv"));
        let cfg = serde_json::json!({
            "mu": { "alphabet": [0, 1], "mass": [0.5, 0.5] },
            "psi": { "alphabet": [0, 1], "mass": [0.5, 0.5] },
            "rho": "hamming",
            "R": 0.4387,
            "targetDistortion": 0.25,
            "nList": [4, 8, 12, 16],
            "trials": 10000,
            "seed": 42,
            "format": "csv",
            "outputPath": out,
        });
        let path = dir.path().join(format!("cfg{k}.json"));
        std::fs::write(&path, cfg.to_string()).unwrap();
        match run_simulate(&path, &out, threads) {
            Ok(r) => runs.push(r),
            Err(e) => return (false, format!("run {k} failed: {e}")),
        }
    }
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    (
        same && !runs[0].0.is_empty(),
        format!("4 runs (threads 1, 1, 4, 4): CSV and JSON byte-identical {same}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("constrained MI closed form", c1_closed_form),
        ("inverse consistency", c2_inverse),
        ("LP/OT bridge", c3_bridge),
        ("type divergence sequence", c4_type_kl),
        ("type-class uniformity", c5_uniformity),
        ("Marton coupling bound", c6_marton),
        ("binary benchmark trend", c7_benchmark),
        ("finite randomization rate", c8_randomization),
        ("simulate determinism", c9_determinism),
    ];
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        passed += ok as usize;
        println!(
            "criterion {} [{name}]: {} ({detail})",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
