//! Exact discrete optimal transport, couplings and distances between pmfs.

mod divergence;
mod network_simplex;
mod prokhorov;
mod sampler;

pub use divergence::{entropy_bits, kl_divergence, tv_distance, Divergence};
pub use network_simplex::{solve_transport, TransportPlan};
pub use prokhorov::{blowup, prokhorov_distance, Metric, ProkhorovResult, PROKHOROV_LIMIT};
pub(crate) use sampler::draw_index;
pub use sampler::{coupling_sampler, maximal_coupling, maximal_coupling_row, CouplingSampler};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{DistortionMatrix, JointPmf, Pmf};
use crate::scalar::Scalar;

/// Optimal coupling of two pmfs under a cost table.
#[derive(Debug, Clone)]
pub struct TransportResult<T: Scalar> {
    pub coupling: JointPmf<T>,
    pub cost: T,
    pub pivots: usize,
    /// Optimal dual potentials `(u, v)` with `u_x + v_y <= rho(x, y)`.
    pub potentials: Option<(Vec<T>, Vec<T>)>,
    pub max_dual_violation: f64,
    pub complementary_slackness: f64,
}

/// Minimum of `E[rho(X, Y)]` over couplings of `mu` and `psi`.
pub fn ot_solve<T: Scalar>(mu: &Pmf<T>, psi: &Pmf<T>, rho: &DistortionMatrix<T>) -> Result<TransportResult<T>> {
    rho.check_shape(mu.len(), psi.len())?;
    let plan = solve_transport(mu.mass(), psi.mass(), rho.entries())?;
    Ok(TransportResult {
        coupling: JointPmf::from_parts(mu.alphabet().clone(), psi.alphabet().clone(), plan.flow),
        cost: plan.cost,
        pivots: plan.pivots,
        potentials: Some((plan.u, plan.v)),
        max_dual_violation: plan.max_dual_violation,
        complementary_slackness: plan.complementary_slackness,
    })
}

/// Comonotone coupling of two pmfs on the real line; optimal for any convex
/// cost of `x - y`, and reported here with squared-error cost.
pub fn quantile_coupling_1d<T: Scalar>(mu: &Pmf<T>, psi: &Pmf<T>) -> TransportResult<T> {
    let (m, n) = (mu.len(), psi.len());
    let mut flow = vec![T::zero(); m * n];
    let mut a = mu.mass().to_vec();
    let mut b = psi.mass().to_vec();
    let (mut i, mut j) = (0, 0);
    let mut cost = T::zero();
    while i < m && j < n {
        if a[i].is_zero() {
            i += 1;
            continue;
        }
        if b[j].is_zero() {
            j += 1;
            continue;
        }
        let x = T::min_of(&a[i], &b[j]);
        let d = mu.alphabet().label(i) - psi.alphabet().label(j);
        cost = cost + x.clone() * T::from_f64(d * d).expect("finite labels");
        flow[i * n + j] = flow[i * n + j].clone() + x.clone();
        a[i] = a[i].clone() - x.clone();
        b[j] = b[j].clone() - x;
        // float leftovers below tolerance would otherwise spawn spurious cells
        if a[i] <= T::tolerance() {
            i += 1;
        }
        if j < n && b[j] <= T::tolerance() {
            j += 1;
        }
    }
    TransportResult {
        coupling: JointPmf::from_parts(mu.alphabet().clone(), psi.alphabet().clone(), flow),
        cost,
        pivots: 0,
        potentials: None,
        max_dual_violation: 0.0,
        complementary_slackness: 0.0,
    }
}

/// `x_label,y_label,mass` rows of the nonzero cells.
pub fn coupling_csv<T: Scalar>(v: &JointPmf<T>) -> String {
    let mut out = String::from("x_label,y_label,mass\n");
    for x in 0..v.rows() {
        for y in 0..v.cols() {
            let m = v.get(x, y).to_f64();
            if m != 0.0 {
                let _ = writeln!(out, "{},{},{}", v.x_alphabet().label(x), v.y_alphabet().label(y), m);
            }
        }
    }
    out
}

/// Check that `v` couples `mu` and `psi` within `tol`.
pub fn check_coupling<T: Scalar>(v: &JointPmf<T>, mu: &Pmf<T>, psi: &Pmf<T>, tol: f64) -> Result<()> {
    let err = v.marginal_error(mu.mass(), psi.mass());
    if err > tol {
        return Err(Error::InvalidParameter(format!("coupling marginals off by {err:e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{distortion, Alphabet};

    fn bin() -> Alphabet {
        Alphabet::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn equal_marginals_cost_zero() {
        let a = Alphabet::new(vec![-1.0, 0.0, 2.0]).unwrap();
        let mu = Pmf::<f64>::new(a.clone(), vec![0.2, 0.3, 0.5]).unwrap();
        let rho = DistortionMatrix::squared_error(&a, &a);
        let t = ot_solve(&mu, &mu, &rho).unwrap();
        assert_eq!(t.cost, 0.0);
        check_coupling(&t.coupling, &mu, &mu, 1e-12).unwrap();
    }

    #[test]
    fn binary_hamming_quarter() {
        let mu = Pmf::<f64>::new(bin(), vec![0.5, 0.5]).unwrap();
        let psi = Pmf::<f64>::new(bin(), vec![0.25, 0.75]).unwrap();
        let rho = DistortionMatrix::hamming(&bin(), &bin());
        let t = ot_solve(&mu, &psi, &rho).unwrap();
        // one-parameter polytope: v01 = t, v10 = t - 1/4 >= 0, v11 = 3/4 - t >= 0
        let brute = (0..=500_000)
            .map(|k| k as f64 * 1e-6)
            .filter(|t| *t >= 0.25 && *t <= 0.5)
            .map(|t| t + (t - 0.25))
            .fold(f64::INFINITY, f64::min);
        assert!((t.cost - 0.25).abs() < 1e-12);
        assert!((brute - 0.25).abs() < 1e-9);
        assert!((distortion(&t.coupling, &rho).unwrap() - t.cost).abs() < 1e-12);
    }

    #[test]
    fn quantile_examples() {
        let a = Alphabet::new(vec![0.0, 1.0, 3.0]).unwrap();
        let mu = Pmf::<f64>::new(a.clone(), vec![0.2, 0.3, 0.5]).unwrap();
        let q = quantile_coupling_1d(&mu, &mu);
        assert_eq!(q.cost, 0.0);
        assert_eq!(q.coupling.get(1, 1), &0.3);

        let point = Pmf::<f64>::point_mass(Alphabet::new(vec![0.5]).unwrap(), 0).unwrap();
        let q = quantile_coupling_1d(&point, &mu);
        let expect: f64 = mu.expect(|y| (0.5 - y) * (0.5 - y));
        assert!((q.cost - expect).abs() < 1e-15);
        assert_eq!(q.coupling.row(0), mu.mass());
    }

    #[test]
    fn quantile_shifted_two_point_matches_network_simplex() {
        let a = Alphabet::new(vec![0.0, 1.0]).unwrap();
        let b = Alphabet::new(vec![0.5, 2.0]).unwrap();
        let mu = Pmf::<f64>::new(a.clone(), vec![0.6, 0.4]).unwrap();
        let psi = Pmf::<f64>::new(b.clone(), vec![0.3, 0.7]).unwrap();
        let q = quantile_coupling_1d(&mu, &psi);
        let t = ot_solve(&mu, &psi, &DistortionMatrix::squared_error(&a, &b)).unwrap();
        assert!((q.cost - t.cost).abs() < 1e-12);
        // CDF crossing: 0.3 of the mass at 0 goes to 0.5, the rest to 2
        assert!((q.coupling.get(0, 0) - 0.3).abs() < 1e-15);
        assert!((q.coupling.get(0, 1) - 0.3).abs() < 1e-15);
        assert!((q.coupling.get(1, 1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn csv_rows() {
        let mu = Pmf::<f64>::new(bin(), vec![0.5, 0.5]).unwrap();
        let t = quantile_coupling_1d(&mu, &mu);
        assert_eq!(coupling_csv(&t.coupling), "x_label,y_label,mass\n0,0,0.5\n1,1,0.5\n");
    }
}
