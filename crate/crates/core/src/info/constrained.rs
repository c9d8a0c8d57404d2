//! Minimum mutual information under an output constraint and its inverse.
//!
//! On `(feasible_d_min, zero_i_d_max)` every point of the curve is the
//! Lagrangian minimizer for some finite `beta`, so both `i_min` and
//! `d_curve` reduce to a one-dimensional bisection on `beta`. The two ends
//! are handled directly: the product coupling above `zero_i_d_max`, and the
//! maximum-entropy coupling on the optimal-transport face at the floor.

use std::fmt::Write as _;
use std::sync::OnceLock;

use num_traits::Float;
use serde::Serialize;

use super::mutual_information;
use super::sinkhorn::{LagrangianCoupling, Sinkhorn};
use crate::error::Result;
use crate::model::{distortion, product_cost, DistortionMatrix, JointPmf, Pmf};
use crate::scalar::{Real, Scalar};
use crate::transport::{ot_solve, solve_transport, TransportResult};

/// Largest `beta` tried before falling back to the floor coupling.
pub const BETA_CAP: f64 = 18_446_744_073_709_551_616.0;

/// Target accuracy of `E[rho]` in `i_min`, relative to `max(1, zero_i_d_max)`.
pub const DISTORTION_TOL: f64 = 1e-9;

/// Which branch of the definition produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `D` below the transport cost: no coupling qualifies.
    Infeasible,
    /// `D` at the transport cost: optimal couplings only.
    Floor,
    Interior,
    /// `D` at or above the independent-coupling cost.
    Product,
}

#[derive(Debug, Clone)]
pub struct IMin<T: Real> {
    /// `+inf` when infeasible.
    pub bits: T,
    pub regime: Regime,
    /// Achieving coupling, absent when infeasible.
    pub coupling: Option<JointPmf<T>>,
    /// `0` on the product branch, `+inf` at the floor.
    pub beta: T,
    /// `E[rho]` of the returned coupling.
    pub distortion: T,
    /// Whether the last proportional fit met its tolerance.
    pub converged: bool,
}

/// Point `(beta, D, I)` on the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImSample {
    pub beta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "I_bits")]
    pub i_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ImCurve {
    pub samples: Vec<ImSample>,
    pub feasible_d_min: f64,
    #[serde(rename = "zeroIDMax")]
    pub zero_i_d_max: f64,
}

impl ImCurve {
    /// `beta,D,I_bits` rows; infinities print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,D,I_bits\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{}", s.beta, s.d, s.i_bits);
        }
        out
    }

    /// Names of violated shape properties: `I` nonincreasing in `D`, `D`
    /// nonincreasing in `beta`, and convexity of `I` on consecutive finite
    /// triples, all within `tol`.
    pub fn check_shape(&self, tol: f64) -> Vec<String> {
        let mut bad = Vec::new();
        let mut by_d: Vec<&ImSample> = self.samples.iter().filter(|s| s.i_bits.is_finite()).collect();
        by_d.sort_by(|a, b| a.d.total_cmp(&b.d));
        for w in by_d.windows(2) {
            if w[1].i_bits > w[0].i_bits + tol {
                bad.push(format!("I increases between D={} and D={}", w[0].d, w[1].d));
            }
        }
        for w in by_d.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            if c.d - a.d <= 0.0 {
                continue;
            }
            let t = (b.d - a.d) / (c.d - a.d);
            let chord = a.i_bits + t * (c.i_bits - a.i_bits);
            if b.i_bits > chord + tol {
                bad.push(format!("I not convex at D={}", b.d));
            }
        }
        let mut by_beta: Vec<&ImSample> = self.samples.iter().filter(|s| !s.beta.is_nan()).collect();
        by_beta.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        for w in by_beta.windows(2) {
            if w[1].beta > w[0].beta && w[1].d > w[0].d + tol {
                bad.push(format!("D increases between beta={} and beta={}", w[0].beta, w[1].beta));
            }
        }
        bad
    }
}

/// `I_m(mu || psi, .)` for one fixed instance. The transport solve and the
/// floor coupling are computed once and shared by all queries.
#[derive(Debug)]
pub struct ConstrainedInfo<T: Real> {
    mu: Pmf<T>,
    psi: Pmf<T>,
    rho: DistortionMatrix<T>,
    ot: TransportResult<T>,
    d_min: T,
    d_max: T,
    floor: OnceLock<IMin<T>>,
}

impl<T: Real> ConstrainedInfo<T> {
    pub fn new(mu: &Pmf<T>, psi: &Pmf<T>, rho: &DistortionMatrix<T>) -> Result<Self> {
        let ot = ot_solve(mu, psi, rho)?;
        let d_max = product_cost(mu, psi, rho)?;
        // the transport cost can exceed the product cost only by rounding
        let d_min = Float::min(ot.cost, d_max);
        Ok(Self {
            mu: mu.clone(),
            psi: psi.clone(),
            rho: rho.clone(),
            ot,
            d_min,
            d_max,
            floor: OnceLock::new(),
        })
    }

    pub fn feasible_d_min(&self) -> T {
        self.d_min
    }

    pub fn zero_i_d_max(&self) -> T {
        self.d_max
    }

    pub fn transport(&self) -> &TransportResult<T> {
        &self.ot
    }

    fn scale(&self) -> T {
        Float::max(T::one(), self.d_max)
    }

    /// Width of the band above `feasible_d_min` treated as the floor.
    fn floor_band(&self) -> T {
        T::lit(DISTORTION_TOL) * self.scale()
    }

    fn degenerate(&self) -> bool {
        self.d_max - self.d_min <= self.floor_band()
    }

    fn sinkhorn(&self) -> Result<Sinkhorn<T>> {
        Sinkhorn::new(&self.mu, &self.psi, &self.rho)
    }

    fn point_from_fit(&self, fit: LagrangianCoupling<T>, regime: Regime) -> Result<IMin<T>> {
        let bits = mutual_information(&fit.coupling);
        let d = distortion(&fit.coupling, &self.rho)?;
        Ok(IMin {
            bits,
            regime,
            coupling: Some(fit.coupling),
            beta: fit.beta,
            distortion: d,
            converged: fit.converged,
        })
    }

    fn product(&self) -> IMin<T> {
        IMin {
            bits: T::zero(),
            regime: Regime::Product,
            coupling: Some(JointPmf::product(&self.mu, &self.psi)),
            beta: T::zero(),
            distortion: self.d_max,
            converged: true,
        }
    }

    /// Cells carrying mass in at least one optimal coupling.
    ///
    /// Complementary slackness confines optimal couplings to the cells with
    /// zero reduced cost, but degenerate duals can leave cells there that
    /// every optimal coupling avoids. Each remaining candidate is tested by
    /// maximizing its mass over couplings that pay a penalty off the
    /// zero-reduced-cost set.
    fn optimal_face_support(&self) -> Result<Vec<bool>> {
        let (m, n) = (self.mu.len(), self.psi.len());
        let (u, v) = self.ot.potentials.clone().expect("network simplex returns duals");
        let tol = T::lit(DISTORTION_TOL) * Float::max(T::one(), self.rho.max_entry());
        let tight: Vec<bool> = (0..m * n)
            .map(|k| *self.rho.get(k / n, k % n) - u[k / n] - v[k % n] <= tol)
            .collect();
        let positive = |f: &T| *f > T::tolerance();
        let mut support: Vec<bool> = self.ot.coupling.mass().iter().map(positive).collect();
        let penalty = T::lit(2.0);
        for k in 0..m * n {
            if support[k] || !tight[k] || self.mu.mass()[k / n].is_zero() || self.psi.mass()[k % n].is_zero() {
                continue;
            }
            let cost: Vec<T> = (0..m * n)
                .map(|c| {
                    if c == k {
                        -T::one()
                    } else if tight[c] {
                        T::zero()
                    } else {
                        penalty
                    }
                })
                .collect();
            let plan = solve_transport(self.mu.mass(), self.psi.mass(), &cost)?;
            if positive(&plan.flow[k]) {
                for (c, f) in plan.flow.iter().enumerate() {
                    if tight[c] && positive(f) {
                        support[c] = true;
                    }
                }
            }
        }
        Ok(support)
    }

    /// Minimum-information optimal coupling: maximum entropy on the face
    /// `{rho - u - v = 0}` of the transport dual.
    pub fn floor(&self) -> Result<&IMin<T>> {
        if let Some(f) = self.floor.get() {
            return Ok(f);
        }
        let value = if self.degenerate() {
            let mut p = self.product();
            p.regime = Regime::Floor;
            p
        } else {
            let support = self.optimal_face_support()?;
            let width = self.psi.len();
            let fit = self.sinkhorn()?.solve_on_face(|x, y| support[x * width + y])?;
            self.point_from_fit(fit, Regime::Floor)?
        };
        Ok(self.floor.get_or_init(|| value))
    }

    /// `I_m(mu || psi, d)` in bits.
    pub fn i_min(&self, d: T) -> Result<IMin<T>> {
        let scale = self.scale();
        if d < self.d_min - T::tolerance() * scale || d.is_nan() {
            return Ok(IMin {
                bits: T::infinity(),
                regime: Regime::Infeasible,
                coupling: None,
                beta: T::nan(),
                distortion: T::nan(),
                converged: true,
            });
        }
        if d >= self.d_max {
            return Ok(self.product());
        }
        if d <= self.d_min + self.floor_band() {
            return self.floor().cloned();
        }
        let tol = T::lit(DISTORTION_TOL) * scale;
        let mut sk = self.sinkhorn()?;
        let (mut lo, mut hi) = (T::zero(), T::one());
        let mut best = loop {
            let fit = sk.solve(hi)?;
            let e = distortion(&fit.coupling, &self.rho)?;
            if e <= d {
                break fit;
            }
            lo = hi;
            hi = hi + hi;
            if hi > T::lit(BETA_CAP) {
                return self.floor().cloned();
            }
        };
        loop {
            let mid = (lo + hi) / T::lit(2.0);
            if !(mid > lo && mid < hi) {
                break;
            }
            let fit = sk.solve(mid)?;
            let e = distortion(&fit.coupling, &self.rho)?;
            let done = Float::abs(e - d) <= tol;
            if e > d {
                lo = mid;
            } else {
                hi = mid;
            }
            // keep the fit on the feasible side unless it is within tolerance
            if done || e <= d {
                best = fit;
            }
            if done {
                break;
            }
        }
        self.point_from_fit(best, Regime::Interior)
    }

    /// Point of the curve at rate `r` bits: `(beta, D, I)` with `I = r` on
    /// the interior, or the clamped end point.
    pub fn d_curve_point(&self, r: T) -> Result<IMin<T>> {
        if r.is_nan() || r <= T::zero() || self.degenerate() {
            return Ok(self.product());
        }
        let floor = self.floor()?;
        if r >= floor.bits {
            return Ok(floor.clone());
        }
        let tol = T::lit(1e-12);
        let mut sk = self.sinkhorn()?;
        let (mut lo, mut hi) = (T::zero(), T::one());
        let mut best = loop {
            let fit = sk.solve(hi)?;
            if mutual_information(&fit.coupling) >= r {
                break fit;
            }
            lo = hi;
            hi = hi + hi;
            if hi > T::lit(BETA_CAP) {
                return Ok(floor.clone());
            }
        };
        loop {
            let mid = (lo + hi) / T::lit(2.0);
            if !(mid > lo && mid < hi) {
                break;
            }
            let fit = sk.solve(mid)?;
            let i = mutual_information(&fit.coupling);
            let done = Float::abs(i - r) <= tol;
            if i < r {
                lo = mid;
            } else {
                hi = mid;
            }
            if done || i >= r {
                best = fit;
            }
            if done {
                break;
            }
        }
        self.point_from_fit(best, Regime::Interior)
    }

    /// `D(mu, psi, r)`: the inverse of `i_min`.
    pub fn d_curve(&self, r: T) -> Result<T> {
        Ok(self.d_curve_point(r)?.distortion)
    }

    fn sample_of(m: &IMin<T>, d: T) -> ImSample {
        ImSample {
            beta: Scalar::to_f64(&m.beta),
            d: Scalar::to_f64(&d),
            i_bits: Scalar::to_f64(&m.bits),
        }
    }

    /// Curve evaluated at the requested distortions.
    pub fn curve_on_distortions(&self, ds: &[T]) -> Result<ImCurve> {
        let samples = ds
            .iter()
            .map(|&d| self.i_min(d).map(|m| Self::sample_of(&m, d)))
            .collect::<Result<_>>()?;
        Ok(self.wrap(samples))
    }

    /// Curve traced by the Lagrangian minimizers at the given `beta`s.
    pub fn curve_on_betas(&self, betas: &[T]) -> Result<ImCurve> {
        let mut sk = self.sinkhorn()?;
        let mut order: Vec<usize> = (0..betas.len()).collect();
        order.sort_by(|&a, &b| betas[a].partial_cmp(&betas[b]).expect("finite beta"));
        let mut samples = vec![None; betas.len()];
        for k in order {
            let fit = sk.solve(betas[k])?;
            let m = self.point_from_fit(fit, Regime::Interior)?;
            samples[k] = Some(Self::sample_of(&m, m.distortion));
        }
        Ok(self.wrap(samples.into_iter().map(|s| s.expect("filled")).collect()))
    }

    fn wrap(&self, samples: Vec<ImSample>) -> ImCurve {
        ImCurve {
            samples,
            feasible_d_min: Scalar::to_f64(&self.d_min),
            zero_i_d_max: Scalar::to_f64(&self.d_max),
        }
    }
}

/// `I_m(mu || psi, d)` in bits; `+inf` below the transport cost.
pub fn i_min<T: Real>(mu: &Pmf<T>, psi: &Pmf<T>, rho: &DistortionMatrix<T>, d: T) -> Result<IMin<T>> {
    ConstrainedInfo::new(mu, psi, rho)?.i_min(d)
}

/// `D(mu, psi, r)` for `r` in bits.
pub fn d_curve<T: Real>(mu: &Pmf<T>, psi: &Pmf<T>, rho: &DistortionMatrix<T>, r: T) -> Result<T> {
    ConstrainedInfo::new(mu, psi, rho)?.d_curve(r)
}
