//! Log-domain iterative proportional fitting for
//! `min I(v) + beta * E_v[rho]` over couplings of fixed marginals.
//!
//! The minimizer has the form `v = mu(x) psi(y) exp(f_x + g_y - beta rho)`.
//! Alternating updates of `f` and `g` match the two marginals in turn.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{DistortionMatrix, JointPmf, Pmf};
use crate::scalar::Real;

/// Iteration cap for one fit.
pub const SINKHORN_MAX_ITER: usize = 200_000;

/// Minimizer of the Lagrangian with fit diagnostics.
#[derive(Debug, Clone)]
pub struct LagrangianCoupling<T: Real> {
    pub coupling: JointPmf<T>,
    pub beta: T,
    pub iterations: usize,
    /// l1 error of the x-marginal after the last y-update.
    pub residual: T,
    pub converged: bool,
}

/// Reusable solver: zero-mass points pruned once, potentials kept between
/// calls as warm starts.
#[derive(Debug, Clone)]
pub(crate) struct Sinkhorn<T: Real> {
    mu: Pmf<T>,
    psi: Pmf<T>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    log_a: Vec<T>,
    log_b: Vec<T>,
    /// Pruned cost, row-major.
    cost: Vec<T>,
    f: Vec<T>,
    g: Vec<T>,
}

fn log_sum_exp<T: Real>(it: impl Iterator<Item = T> + Clone) -> T {
    let m = it.clone().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + it.map(|v| (v - m).exp()).fold(T::zero(), |s, e| s + e).ln()
}

impl<T: Real> Sinkhorn<T> {
    pub(crate) fn new(mu: &Pmf<T>, psi: &Pmf<T>, rho: &DistortionMatrix<T>) -> Result<Self> {
        rho.check_shape(mu.len(), psi.len())?;
        let rows = mu.support();
        let cols = psi.support();
        let cost = rows
            .iter()
            .flat_map(|&x| cols.iter().map(move |&y| *rho.get(x, y)))
            .collect();
        Ok(Self {
            log_a: rows.iter().map(|&x| mu.mass()[x].ln()).collect(),
            log_b: cols.iter().map(|&y| psi.mass()[y].ln()).collect(),
            f: vec![T::zero(); rows.len()],
            g: vec![T::zero(); cols.len()],
            mu: mu.clone(),
            psi: psi.clone(),
            rows,
            cols,
            cost,
        })
    }

    /// Fit against a pruned row-major log-kernel; `-inf` entries are
    /// excluded cells.
    fn fit(&mut self, log_kernel: &[T], beta: T) -> Result<LagrangianCoupling<T>> {
        let (m, n) = (self.rows.len(), self.cols.len());
        let tol = T::fit_tolerance();
        let mut iterations = 0;
        let mut residual = T::infinity();
        while iterations < SINKHORN_MAX_ITER {
            iterations += 1;
            for i in 0..m {
                let k = &log_kernel[i * n..(i + 1) * n];
                self.f[i] = -log_sum_exp((0..n).map(|j| self.log_b[j] + self.g[j] + k[j]));
            }
            for j in 0..n {
                self.g[j] = -log_sum_exp((0..m).map(|i| self.log_a[i] + self.f[i] + log_kernel[i * n + j]));
            }
            // y-marginal now exact; measure the x side
            residual = (0..m).fold(T::zero(), |acc, i| {
                let s = (0..n).fold(T::zero(), |s, j| {
                    s + (self.log_b[j] + self.g[j] + self.f[i] + log_kernel[i * n + j]).exp()
                });
                acc + Float::abs((s - T::one()) * self.log_a[i].exp())
            });
            if !residual.is_finite() {
                return Err(Error::NotConverged {
                    iterations,
                    residual: f64::INFINITY,
                });
            }
            if residual <= tol {
                break;
            }
        }
        let mut mass = vec![T::zero(); self.mu.len() * self.psi.len()];
        let width = self.psi.len();
        for (i, &x) in self.rows.iter().enumerate() {
            for (j, &y) in self.cols.iter().enumerate() {
                mass[x * width + y] =
                    (self.log_a[i] + self.log_b[j] + self.f[i] + self.g[j] + log_kernel[i * n + j]).exp();
            }
        }
        Ok(LagrangianCoupling {
            coupling: JointPmf::from_parts(self.mu.alphabet().clone(), self.psi.alphabet().clone(), mass),
            beta,
            iterations,
            residual,
            converged: residual <= tol,
        })
    }

    pub(crate) fn solve(&mut self, beta: T) -> Result<LagrangianCoupling<T>> {
        let k: Vec<T> = self.cost.iter().map(|&c| -beta * c).collect();
        self.fit(&k, beta)
    }

    /// Maximum-entropy coupling supported on the cells where `on_face` holds
    /// (indices in the full, unpruned alphabets). Reported with `beta = inf`.
    pub(crate) fn solve_on_face(&mut self, on_face: impl Fn(usize, usize) -> bool) -> Result<LagrangianCoupling<T>> {
        let mut k = Vec::with_capacity(self.cost.len());
        for &x in &self.rows {
            for &y in &self.cols {
                k.push(if on_face(x, y) { T::zero() } else { T::neg_infinity() });
            }
        }
        self.f.iter_mut().for_each(|v| *v = T::zero());
        self.g.iter_mut().for_each(|v| *v = T::zero());
        self.fit(&k, T::infinity())
    }
}

/// Unique minimizer of `I(v) + beta * E_v[rho]` (nats) over couplings of
/// `mu` and `psi`. Non-convergence within the cap is reported through
/// `converged`, not as an error.
pub fn lagrangian_coupling<T: Real>(
    mu: &Pmf<T>,
    psi: &Pmf<T>,
    rho: &DistortionMatrix<T>,
    beta: T,
) -> Result<LagrangianCoupling<T>> {
    if beta.is_nan() || beta < T::zero() {
        return Err(Error::InvalidParameter("beta must be nonnegative".into()));
    }
    Sinkhorn::new(mu, psi, rho)?.solve(beta)
}
