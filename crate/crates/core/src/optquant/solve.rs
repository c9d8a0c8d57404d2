//! Problems (P1) and (P3) as linear programs over mixtures of
//! deterministic quantizers.

use serde::Serialize;

use super::columns::{enumerate_quantizers, CellShape, QuantizerColumn};
use super::simplex::{solve_lp, Constraint, LinearProgram, LpStatus, Relation};
use crate::error::{Error, Result};
use crate::model::{mixture_joint, product_cost, DistortionMatrix, FiniteMixtureQuantizer, Pmf};
use crate::scalar::Scalar;
use crate::transport::{blowup, ot_solve, prokhorov_distance, Metric, PROKHOROV_LIMIT};

/// Optimal mixture, or the infeasibility verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", bound(serialize = "T: Scalar + Serialize"))]
pub struct LpSolution<T: Scalar> {
    pub status: LpStatus,
    pub mixture: Option<FiniteMixtureQuantizer<T>>,
    /// `sum w_i cost_i` over the returned mixture.
    pub objective: Option<T>,
    /// Multipliers of the constraint rows, simplex row last.
    pub duals: Vec<T>,
    pub dual_residual: f64,
    pub columns: usize,
    pub pivots: usize,
    /// Largest deviation of the mixture's output law from `psi` (P1).
    pub output_error: f64,
    /// Prokhorov distance of the output law from `psi` (P3).
    pub output_distance: Option<f64>,
    /// The optimum sits on the boundary of the closed ball (P3).
    pub on_boundary: bool,
}

fn mixture_from<T: Scalar>(cols: &[QuantizerColumn<T>], x: &[T], psi: &Pmf<T>) -> Result<FiniteMixtureQuantizer<T>> {
    let mut weights = Vec::new();
    let mut maps = Vec::new();
    for (c, w) in cols.iter().zip(x) {
        if *w > T::tolerance() {
            weights.push(w.clone());
            maps.push(c.quantizer.clone());
        }
    }
    let total = T::sum(&weights);
    let weights = weights.into_iter().map(|w| w / total.clone()).collect();
    FiniteMixtureQuantizer::new(psi.alphabet().clone(), weights, maps)
}

fn finish<T: Scalar>(
    cols: &[QuantizerColumn<T>],
    lp: &LinearProgram<T>,
    mu: &Pmf<T>,
    psi: &Pmf<T>,
) -> Result<LpSolution<T>> {
    let out = solve_lp(lp)?;
    let mut sol = LpSolution {
        status: out.status,
        mixture: None,
        objective: None,
        duals: out.duals,
        dual_residual: out.dual_residual,
        columns: cols.len(),
        pivots: out.pivots,
        output_error: f64::NAN,
        output_distance: None,
        on_boundary: false,
    };
    if out.status != LpStatus::Optimal {
        return Ok(sol);
    }
    let mixture = mixture_from(cols, &out.x, psi)?;
    let joint = mixture_joint(&mixture, mu)?;
    sol.output_error = joint
        .y_marginal_masses()
        .iter()
        .zip(psi.mass())
        .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
        .fold(0.0, f64::max);
    sol.objective = Some(
        mixture
            .weights()
            .iter()
            .zip(mixture.quantizers())
            .map(|(w, q)| {
                let c = cols.iter().find(|c| &c.quantizer == q).expect("column of the mixture");
                w.clone() * c.cost.clone()
            })
            .fold(T::zero(), |a, b| a + b),
    );
    sol.mixture = Some(mixture);
    Ok(sol)
}

fn simplex_row<T: Scalar>(k: usize) -> Constraint<T> {
    Constraint {
        coeffs: vec![T::one(); k],
        relation: Relation::Eq,
        rhs: T::one(),
    }
}

/// Cheapest mixture of `M`-level quantizers whose output law is `psi`.
pub fn solve_p1<T: Scalar>(
    mu: &Pmf<T>,
    psi: &Pmf<T>,
    rho: &DistortionMatrix<T>,
    m: usize,
    shape: CellShape,
) -> Result<LpSolution<T>> {
    let cols = enumerate_quantizers(mu, psi.alphabet(), rho, m, shape)?;
    let mut constraints: Vec<Constraint<T>> = (0..psi.len())
        .map(|y| Constraint {
            coeffs: cols.iter().map(|c| c.output_pmf.mass()[y].clone()).collect(),
            relation: Relation::Eq,
            rhs: psi.mass()[y].clone(),
        })
        .collect();
    constraints.push(simplex_row(cols.len()));
    let lp = LinearProgram {
        cost: cols.iter().map(|c| c.cost.clone()).collect(),
        constraints,
    };
    finish(&cols, &lp, mu, psi)
}

fn subset_mass<T: Scalar>(mass: &[T], mask: u32) -> T {
    mass.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .fold(T::zero(), |acc, (_, v)| acc + v.clone())
}

/// Cheapest mixture whose output law lies in the closed Prokhorov ball of
/// radius `delta` around `psi`, written as Strassen's two-sided subset
/// inequalities under `metric`.
pub fn solve_p3<T: Scalar>(
    mu: &Pmf<T>,
    psi: &Pmf<T>,
    rho: &DistortionMatrix<T>,
    m: usize,
    delta: f64,
    metric: &Metric,
    shape: CellShape,
) -> Result<LpSolution<T>> {
    let k = psi.len();
    if k > PROKHOROV_LIMIT {
        return Err(Error::SupportTooLarge {
            size: k,
            limit: PROKHOROV_LIMIT,
        });
    }
    if metric.size() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: metric.size(),
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius {delta} must be finite and nonnegative"
        )));
    }
    let cols = enumerate_quantizers(mu, psi.alphabet(), rho, m, shape)?;
    let d = T::from_f64(delta).expect("finite radius");
    let mut constraints = Vec::new();
    for a in 1u32..(1u32 << k) {
        let grown = blowup(metric, a, delta, true);
        let coeffs = |mask: u32| -> Vec<T> { cols.iter().map(|c| subset_mass(c.output_pmf.mass(), mask)).collect() };
        // marginal(A) <= psi(A^delta) + delta
        let rhs = subset_mass(psi.mass(), grown) + d.clone();
        if rhs < T::one() {
            constraints.push(Constraint {
                coeffs: coeffs(a),
                relation: Relation::Le,
                rhs,
            });
        }
        // marginal(A^delta) >= psi(A) - delta
        let rhs = subset_mass(psi.mass(), a) - d.clone();
        if rhs > T::zero() {
            constraints.push(Constraint {
                coeffs: coeffs(grown),
                relation: Relation::Ge,
                rhs,
            });
        }
    }
    constraints.push(simplex_row(cols.len()));
    let lp = LinearProgram {
        cost: cols.iter().map(|c| c.cost.clone()).collect(),
        constraints,
    };
    let mut sol = finish(&cols, &lp, mu, psi)?;
    if let Some(mix) = &sol.mixture {
        let out = mixture_joint(mix, mu)?.y_marginal().to_f64();
        let dist = prokhorov_distance(&out, &psi.to_f64(), metric)?.distance;
        sol.output_distance = Some(dist);
        sol.on_boundary = delta > 0.0 && dist >= delta - 1e-9;
    }
    Ok(sol)
}

/// Comparison of (P1) with the unconstrained-kernel transport cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BridgeReport {
    pub p1_objective: f64,
    pub ot_cost: f64,
    /// `p1_objective - ot_cost`.
    pub gap: f64,
    /// `M >= |Y|`, where the two must agree.
    pub equality_expected: bool,
    pub product_cost: f64,
    pub pass: bool,
}

/// `solve_p1 >= ot_solve` always, with equality once `M >= |Y|`.
pub fn p1_vs_ot_check<T: Scalar>(
    mu: &Pmf<T>,
    psi: &Pmf<T>,
    rho: &DistortionMatrix<T>,
    m: usize,
    tol: f64,
) -> Result<BridgeReport> {
    let p1 = solve_p1(mu, psi, rho, m, CellShape::All)?;
    let objective = p1
        .objective
        .ok_or_else(|| Error::InvalidParameter("(P1) is infeasible".into()))?
        .to_f64();
    let ot = ot_solve(mu, psi, rho)?.cost.to_f64();
    let gap = objective - ot;
    let equality_expected = m >= psi.len();
    Ok(BridgeReport {
        p1_objective: objective,
        ot_cost: ot,
        gap,
        equality_expected,
        product_cost: product_cost(mu, psi, rho)?.to_f64(),
        pass: gap >= -tol && (!equality_expected || gap.abs() <= tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;
    use crate::scalar::{ratio, Rational};

    fn binary() -> (Pmf<f64>, Pmf<f64>, DistortionMatrix<f64>) {
        let a = Alphabet::indices(2).unwrap();
        (
            Pmf::from_masses(vec![0.5, 0.5]).unwrap(),
            Pmf::from_masses(vec![0.25, 0.75]).unwrap(),
            DistortionMatrix::hamming(&a, &a),
        )
    }

    #[test]
    fn binary_example() {
        let (mu, psi, rho) = binary();
        let sol = solve_p1(&mu, &psi, &rho, 2, CellShape::All).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() - 0.25).abs() < 1e-12);
        assert!(sol.output_error < 1e-9);
        assert!(sol.dual_residual <= 1e-8);
        let mix = sol.mixture.unwrap();
        let total: f64 = mix.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_level_is_the_product_cost_exactly() {
        let a = Alphabet::indices(3).unwrap();
        let mu = Pmf::new(a.clone(), vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)]).unwrap();
        let psi = Pmf::new(a.clone(), vec![ratio(1, 5), ratio(2, 5), ratio(2, 5)]).unwrap();
        let rho = DistortionMatrix::<Rational>::squared_error(&a, &a);
        let sol = solve_p1(&mu, &psi, &rho, 1, CellShape::All).unwrap();
        assert_eq!(sol.objective.unwrap(), product_cost(&mu, &psi, &rho).unwrap());
        assert_eq!(sol.mixture.unwrap().weights(), psi.mass());
        assert_eq!(sol.dual_residual, 0.0);
        assert_eq!(sol.output_error, 0.0);
    }

    #[test]
    fn equal_marginals_cost_nothing() {
        let mu = Pmf::<f64>::from_masses(vec![0.2, 0.3, 0.5]).unwrap();
        let a = mu.alphabet().clone();
        let sol = solve_p1(&mu, &mu, &DistortionMatrix::squared_error(&a, &a), 3, CellShape::All).unwrap();
        assert_eq!(sol.objective.unwrap(), 0.0);
    }

    #[test]
    fn p3_limits() {
        let (mu, psi, rho) = binary();
        let metric = Metric::discrete(2);
        let free = solve_p3(&mu, &psi, &rho, 2, 1.0, &metric, CellShape::All).unwrap();
        assert_eq!(free.objective.unwrap(), 0.0);
        let tight = solve_p3(&mu, &psi, &rho, 2, 0.0, &metric, CellShape::All).unwrap();
        assert!((tight.objective.unwrap() - 0.25).abs() < 1e-12);
        let mid = solve_p3(&mu, &psi, &rho, 2, 0.1, &metric, CellShape::All).unwrap();
        let v = mid.objective.unwrap();
        // the cheapest law in the ball is (0.35, 0.65), at transport cost 0.15
        assert!((v - 0.15).abs() < 1e-9, "{v}");
        assert!(mid.on_boundary);
    }

    #[test]
    fn bridge() {
        let (mu, psi, rho) = binary();
        let r = p1_vs_ot_check(&mu, &psi, &rho, 2, 1e-8).unwrap();
        assert!(r.pass && r.equality_expected);
        let r = p1_vs_ot_check(&mu, &psi, &rho, 1, 1e-8).unwrap();
        assert!(r.pass && !r.equality_expected);
        assert!((r.gap - (r.product_cost - r.ot_cost)).abs() < 1e-12);
    }
}
