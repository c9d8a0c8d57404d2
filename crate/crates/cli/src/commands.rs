//! One function per subcommand: config text in, rendered output out.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use oclab::coding::{simulate, SimConfig};
use oclab::info::{d_classic, ConstrainedInfo, ImCurve};
use oclab::model::{product_cost, CostSpec, DistortionMatrix, JointPmf, Pmf};
use oclab::optquant::{solve_p1, solve_p3, CellShape, LpSolution, LpStatus};
use oclab::transport::{coupling_csv, ot_solve, Metric};
use oclab::types::{normalized_type_kl, type_class_info, NormalizedKl, TypeClassInfo};
use serde::{Deserialize, Serialize};

use crate::config::{parse, CliError, Format, Globals};
use crate::verify::{run_suite, VerifyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Imin,
    Dcurve,
    P1,
    P3,
    Ot,
    Simulate,
    Types,
    Verify,
}

/// Rendered results of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: String,
    pub csv: String,
    pub warnings: Vec<String>,
    /// Raised after the output is written: infeasible models and failed
    /// invariants still produce their report.
    pub failure: Option<CliError>,
}

impl Output {
    fn new<S: Serialize>(summary: &S, csv: String) -> Result<Self, CliError> {
        let mut json = serde_json::to_string_pretty(summary).map_err(|e| CliError::Runtime(e.to_string()))?;
        json.push('\n');
        Ok(Output {
            json,
            csv,
            warnings: Vec::new(),
            failure: None,
        })
    }

    /// The file written to `outputPath`, or to stdout without one.
    pub fn primary(&self, format: Format) -> &str {
        match format {
            Format::Json => &self.json,
            Format::Csv => &self.csv,
        }
    }
}

/// Where the JSON summary goes when the primary output is CSV.
pub fn summary_path(path: &Path) -> PathBuf {
    let p = path.with_extension("json");
    if p == path {
        path.with_extension("summary.json")
    } else {
        p
    }
}

/// Write the primary output (and, for CSV, the JSON summary beside it).
/// Returns the paths written; with no `outputPath` the primary output goes
/// to stdout.
pub fn emit(globals: &Globals, out: &Output) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Runtime(format!("{}: {e}", p.display()));
    let Some(path) = &globals.output_path else {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(out.primary(globals.format).as_bytes())
            .and_then(|()| stdout.flush())
            .map_err(|e| CliError::Runtime(format!("stdout: {e}")))?;
        return Ok(Vec::new());
    };
    fs::write(path, out.primary(globals.format)).map_err(|e| io(path, e))?;
    let mut written = vec![path.clone()];
    if globals.format == Format::Csv {
        let side = summary_path(path);
        fs::write(&side, &out.json).map_err(|e| io(&side, e))?;
        written.push(side);
    }
    Ok(written)
}

/// Parse `text` as the config of `cmd` and execute it.
pub fn run(cmd: Command, text: &str) -> Result<(Globals, Output), CliError> {
    match cmd {
        Command::Imin => with(text, false, cmd_imin),
        Command::Dcurve => with(text, false, cmd_dcurve),
        Command::P1 => with(text, false, cmd_p1),
        Command::P3 => with(text, false, cmd_p3),
        Command::Ot => with(text, false, cmd_ot),
        Command::Simulate => with(text, true, |_, c| cmd_simulate(&c)),
        Command::Types => with(text, false, cmd_types),
        Command::Verify => with(text, false, cmd_verify),
    }
}

fn with<C, F>(text: &str, keep_seed: bool, f: F) -> Result<(Globals, Output), CliError>
where
    C: serde::de::DeserializeOwned,
    F: FnOnce(&Globals, C) -> Result<Output, CliError>,
{
    let (globals, cfg) = parse::<C>(text, keep_seed)?;
    let out = f(&globals, cfg)?;
    Ok((globals, out))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Evenly spaced points, both ends included.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Span {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.from.is_finite() && self.to.is_finite()) || self.points == 0 {
            return Err(bad("range needs finite ends and at least one point"));
        }
        if self.points == 1 {
            return Ok(vec![self.from]);
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.from + step * i as f64).collect())
    }
}

/// Exactly one of the four fields. `range` spans distortions.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GridSpec {
    pub distortions: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
    pub range: Option<Span>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ImConfig {
    pub mu: Pmf<f64>,
    pub psi: Pmf<f64>,
    pub rho: CostSpec,
    pub grid: GridSpec,
}

fn finite_list(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("{name} must be a nonempty list of finite numbers")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateSample {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub beta: f64,
    #[serde(rename = "I_bits")]
    pub i_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RateCurve {
    pub samples: Vec<RateSample>,
    pub feasible_d_min: f64,
    #[serde(rename = "zeroIDMax")]
    pub zero_i_d_max: f64,
}

fn rate_curve(info: &ConstrainedInfo<f64>, rates: &[f64]) -> Result<RateCurve, CliError> {
    let samples = rates
        .iter()
        .map(|&r| {
            let p = info.d_curve_point(r)?;
            Ok(RateSample {
                r,
                d: p.distortion,
                beta: p.beta,
                i_bits: p.bits,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(RateCurve {
        samples,
        feasible_d_min: info.feasible_d_min(),
        zero_i_d_max: info.zero_i_d_max(),
    })
}

fn instance(mu: &Pmf<f64>, psi: &Pmf<f64>, rho: &CostSpec) -> Result<DistortionMatrix<f64>, CliError> {
    Ok(rho.resolve(mu.alphabet(), psi.alphabet())?)
}

pub fn cmd_imin(_: &Globals, cfg: ImConfig) -> Result<Output, CliError> {
    let rho = instance(&cfg.mu, &cfg.psi, &cfg.rho)?;
    let info = ConstrainedInfo::new(&cfg.mu, &cfg.psi, &rho)?;
    let g = &cfg.grid;
    let chosen = [
        g.distortions.is_some(),
        g.betas.is_some(),
        g.rates.is_some(),
        g.range.is_some(),
    ];
    if chosen.iter().filter(|&&c| c).count() != 1 {
        return Err(bad("grid needs exactly one of distortions, betas, rates, range"));
    }
    if let Some(rates) = &g.rates {
        finite_list("rates", rates)?;
        let curve = rate_curve(&info, rates)?;
        let mut csv = String::from("R,D,beta,I_bits\n");
        for s in &curve.samples {
            let _ = writeln!(csv, "{},{},{},{}", s.r, s.d, s.beta, s.i_bits);
        }
        return Output::new(&curve, csv);
    }
    let curve: ImCurve = if let Some(betas) = &g.betas {
        finite_list("betas", betas)?;
        if betas.iter().any(|&b| b < 0.0) {
            return Err(bad("betas must be nonnegative"));
        }
        info.curve_on_betas(betas)?
    } else {
        let ds = match (&g.distortions, &g.range) {
            (Some(ds), _) => ds.clone(),
            (_, Some(span)) => span.values()?,
            _ => unreachable!("one grid field is set"),
        };
        finite_list("distortions", &ds)?;
        info.curve_on_distortions(&ds)?
    };
    let csv = curve.to_csv();
    Output::new(&curve, csv)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DcurveConfig {
    pub mu: Pmf<f64>,
    pub psi: Pmf<f64>,
    pub rho: CostSpec,
    pub rates: Option<Vec<f64>>,
    /// Spans rates.
    pub range: Option<Span>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DcurveSample {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// Distortion-rate value without the output constraint.
    #[serde(rename = "D_classic")]
    pub d_classic: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Dcurve {
    pub samples: Vec<DcurveSample>,
    pub feasible_d_min: f64,
    #[serde(rename = "zeroIDMax")]
    pub zero_i_d_max: f64,
}

pub fn cmd_dcurve(_: &Globals, cfg: DcurveConfig) -> Result<Output, CliError> {
    let rho = instance(&cfg.mu, &cfg.psi, &cfg.rho)?;
    let rates = match (&cfg.rates, &cfg.range) {
        (Some(r), None) => r.clone(),
        (None, Some(span)) => span.values()?,
        _ => return Err(bad("dcurve needs exactly one of rates, range")),
    };
    finite_list("rates", &rates)?;
    if rates.iter().any(|&r| r < 0.0) {
        return Err(bad("rates must be nonnegative"));
    }
    let info = ConstrainedInfo::new(&cfg.mu, &cfg.psi, &rho)?;
    let samples = rates
        .iter()
        .map(|&r| {
            Ok(DcurveSample {
                r,
                d: info.d_curve(r)?,
                d_classic: d_classic(&cfg.mu, &rho, r)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("R,D,D_classic\n");
    for s in &samples {
        let _ = writeln!(csv, "{},{},{}", s.r, s.d, s.d_classic);
    }
    let summary = Dcurve {
        samples,
        feasible_d_min: info.feasible_d_min(),
        zero_i_d_max: info.zero_i_d_max(),
    };
    Output::new(&summary, csv)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct P1Config {
    pub mu: Pmf<f64>,
    pub psi: Pmf<f64>,
    pub rho: CostSpec,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default)]
    pub cell_shape: CellShape,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct P1Summary<'a> {
    product_cost: f64,
    #[serde(flatten)]
    solution: &'a LpSolution<f64>,
}

fn mixture_csv(s: &LpSolution<f64>) -> String {
    let mut csv = String::from("component,weight,map\n");
    if let Some(mix) = &s.mixture {
        for (i, (w, q)) in mix.weights().iter().zip(mix.quantizers()).enumerate() {
            let map: Vec<String> = q.map().iter().map(usize::to_string).collect();
            let _ = writeln!(csv, "{i},{w},{}", map.join(" "));
        }
    }
    csv
}

pub fn cmd_p1(_: &Globals, cfg: P1Config) -> Result<Output, CliError> {
    let rho = instance(&cfg.mu, &cfg.psi, &cfg.rho)?;
    let s = solve_p1(&cfg.mu, &cfg.psi, &rho, cfg.m, cfg.cell_shape)?;
    let summary = P1Summary {
        product_cost: product_cost(&cfg.mu, &cfg.psi, &rho)?,
        solution: &s,
    };
    let mut out = Output::new(&summary, mixture_csv(&s))?;
    if s.status != LpStatus::Optimal {
        out.failure = Some(CliError::Infeasible(format!("P1 status {:?}", s.status)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    /// `|a - b|` on the output labels.
    Absolute,
    /// `1` off the diagonal.
    Discrete,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(MetricName),
    Rows(Vec<Vec<f64>>),
}

impl MetricSpec {
    fn resolve(&self, psi: &Pmf<f64>) -> Result<Metric, CliError> {
        Ok(match self {
            MetricSpec::Named(MetricName::Absolute) => Metric::absolute(psi.alphabet()),
            MetricSpec::Named(MetricName::Discrete) => Metric::discrete(psi.len()),
            MetricSpec::Rows(rows) => Metric::from_rows(rows.clone())?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct P3Config {
    pub mu: Pmf<f64>,
    pub psi: Pmf<f64>,
    pub rho: CostSpec,
    #[serde(rename = "M")]
    pub m: usize,
    pub delta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub metric: MetricSpec,
    #[serde(default)]
    pub cell_shape: CellShape,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct P3Point {
    delta: f64,
    solution: LpSolution<f64>,
}

pub fn cmd_p3(_: &Globals, cfg: P3Config) -> Result<Output, CliError> {
    let rho = instance(&cfg.mu, &cfg.psi, &cfg.rho)?;
    let metric = cfg.metric.resolve(&cfg.psi)?;
    let deltas = match (cfg.delta, &cfg.deltas) {
        (Some(d), None) => vec![d],
        (None, Some(ds)) if !ds.is_empty() => ds.clone(),
        _ => return Err(bad("p3 needs exactly one of delta, deltas (nonempty)")),
    };
    let points = deltas
        .iter()
        .map(|&delta| {
            let solution = solve_p3(&cfg.mu, &cfg.psi, &rho, cfg.m, delta, &metric, cfg.cell_shape)?;
            Ok(P3Point { delta, solution })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("delta,status,objective,output_distance,on_boundary\n");
    for p in &points {
        let s = &p.solution;
        let status = serde_json::to_value(s.status).expect("status serializes");
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.delta,
            status.as_str().unwrap_or_default(),
            s.objective.map(|v| v.to_string()).unwrap_or_default(),
            s.output_distance.map(|v| v.to_string()).unwrap_or_default(),
            s.on_boundary
        );
    }
    let mut out = Output::new(&serde_json::json!({ "points": points }), csv)?;
    if let Some(p) = points.iter().find(|p| p.solution.status != LpStatus::Optimal) {
        out.failure = Some(CliError::Infeasible(format!(
            "P3 status {:?} at delta {}",
            p.solution.status, p.delta
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OtConfig {
    pub mu: Pmf<f64>,
    pub psi: Pmf<f64>,
    pub rho: CostSpec,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct OtSummary {
    cost: f64,
    product_cost: f64,
    pivots: usize,
    max_dual_violation: f64,
    complementary_slackness: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    coupling: JointPmf<f64>,
}

pub fn cmd_ot(_: &Globals, cfg: OtConfig) -> Result<Output, CliError> {
    let rho = instance(&cfg.mu, &cfg.psi, &cfg.rho)?;
    let t = ot_solve(&cfg.mu, &cfg.psi, &rho)?;
    let (u, v) = t.potentials.clone().unwrap_or_default();
    let summary = OtSummary {
        cost: t.cost,
        product_cost: product_cost(&cfg.mu, &cfg.psi, &rho)?,
        pivots: t.pivots,
        max_dual_violation: t.max_dual_violation,
        complementary_slackness: t.complementary_slackness,
        u,
        v,
        coupling: t.coupling.clone(),
    };
    Output::new(&summary, coupling_csv(&t.coupling))
}

pub fn cmd_simulate(cfg: &SimConfig) -> Result<Output, CliError> {
    cfg.validate()?;
    let result = simulate(cfg)?;
    Output::new(&result, result.to_csv())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TypesConfig {
    pub psi: Pmf<f64>,
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct TypesRow {
    n: usize,
    class: TypeClassInfo,
    normalized_kl: NormalizedKl,
    size_bounds_hold: bool,
    sandwich_holds: bool,
}

pub fn cmd_types(_: &Globals, cfg: TypesConfig) -> Result<Output, CliError> {
    if cfg.n_list.is_empty() || cfg.n_list.contains(&0) {
        return Err(bad("nList must be a nonempty list of positive block lengths"));
    }
    let rows = cfg
        .n_list
        .iter()
        .map(|&n| {
            let class = type_class_info(&cfg.psi, n)?;
            let kl = normalized_type_kl(&cfg.psi, n)?;
            Ok(TypesRow {
                n,
                size_bounds_hold: class.size_bounds_hold(),
                sandwich_holds: kl.sandwich_holds(),
                class,
                normalized_kl: kl,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from(
        "n,counts,log_size_bits,entropy_bits,kl_to_target_bits,normalized_kl_bits,lower_bits,upper_bits,tie_broken\n",
    );
    for r in &rows {
        let counts: Vec<String> = r.class.ntype.counts().iter().map(usize::to_string).collect();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            counts.join(" "),
            r.class.log_size_bits,
            r.class.entropy_bits,
            r.class.kl_to_target_bits,
            r.normalized_kl.value_bits,
            r.normalized_kl.lower_bits,
            r.normalized_kl.upper_bits,
            r.class.tie_broken
        );
    }
    Output::new(&serde_json::json!({ "rows": rows }), csv)
}

pub fn cmd_verify(globals: &Globals, cfg: VerifyConfig) -> Result<Output, CliError> {
    let report = run_suite(&cfg, globals.seed)?;
    let mut out = Output::new(&report, report.to_csv())?;
    out.warnings = report.warnings.clone();
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        out.failure = Some(CliError::Invariant(failed.join(", ")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BINARY: &str = r#""mu": {"alphabet": [0, 1], "mass": [0.5, 0.5]},
        "psi": {"alphabet": [0, 1], "mass": [0.5, 0.5]}, "rho": "hamming""#;

    #[test]
    fn imin_rate_query_and_point_mass() {
        let (_, out) = run(Command::Imin, &format!(r#"{{{BINARY}, "grid": {{"rates": [0.5]}}}}"#)).unwrap();
        assert!(out.csv.starts_with("R,D,beta,I_bits\n0.5,"));
        let point = r#"{"mu": {"alphabet": [0, 1], "mass": [0.3, 0.7]},
            "psi": {"alphabet": [0, 1], "mass": [1, 0]}, "rho": "hamming",
            "grid": {"range": {"from": 0.7, "to": 1.0, "points": 4}}}"#;
        let (_, out) = run(Command::Imin, point).unwrap();
        let i: Vec<f64> = out
            .csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(i, vec![0.0; 4]);
    }

    #[test]
    fn imin_infeasible_points_print_inf() {
        let (_, out) = run(
            Command::Imin,
            &format!(r#"{{{BINARY}, "grid": {{"distortions": [-0.1, 0.2]}}}}"#),
        )
        .unwrap();
        assert!(out.csv.lines().nth(1).unwrap().ends_with(",inf"), "{}", out.csv);
    }

    #[test]
    fn grid_must_pick_one_field() {
        let err = run(
            Command::Imin,
            &format!(r#"{{{BINARY}, "grid": {{"rates": [0.5], "betas": [1]}}}}"#),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn p1_binary_benchmark() {
        let (_, out) = run(Command::P1, &format!(r#"{{{BINARY}, "M": 2}}"#)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert!(v["objective"].as_f64().unwrap().abs() < 1e-12);
        let (_, out) = run(Command::P1, &format!(r#"{{{BINARY}, "M": 1}}"#)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["objective"], v["productCost"]);
    }

    #[test]
    fn p3_sweep_is_monotone() {
        let cfg = r#"{"mu": {"alphabet": [0, 1], "mass": [0.5, 0.5]},
            "psi": {"alphabet": [0, 1], "mass": [0.25, 0.75]}, "rho": "hamming", "M": 2,
            "deltas": [0, 0.05, 0.1, 0.2, 1], "metric": "discrete"}"#;
        let (_, out) = run(Command::P3, cfg).unwrap();
        let obj: Vec<f64> = out
            .csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert!((obj[0] - 0.25).abs() < 1e-12);
        assert!(obj.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{obj:?}");
        assert_eq!(*obj.last().unwrap(), 0.0);
    }

    #[test]
    fn simulate_single_sample() {
        let cfg = format!(r#"{{{BINARY}, "R": 1, "nList": [1], "trials": 1, "seed": 9}}"#);
        let (g, out) = run(Command::Simulate, &cfg).unwrap();
        assert_eq!(g.seed, 9);
        assert_eq!(out.csv.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["seed"], 9);
    }

    #[test]
    fn ot_and_types_render() {
        let (_, out) = run(Command::Ot, &format!("{{{BINARY}}}")).unwrap();
        assert!(out.csv.starts_with("x_label,y_label,mass\n"));
        let (_, out) = run(
            Command::Types,
            r#"{"psi": {"alphabet": [0, 1], "mass": [0.5, 0.5]}, "nList": [4]}"#,
        )
        .unwrap();
        assert!(out.csv.lines().nth(1).unwrap().starts_with("4,2 2,"));
    }

    #[test]
    fn summary_sits_beside_the_csv() {
        assert_eq!(summary_path(Path::new("out/a.csv")), PathBuf::from("out/a.json"));
        assert_eq!(summary_path(Path::new("a.json")), PathBuf::from("a.summary.json"));
    }
}
