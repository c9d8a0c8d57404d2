//! Classical distortion-rate function with a free output law, by
//! Blahut-Arimoto iterations at a fixed slope and bisection on the slope.

use num_traits::Float;

use crate::error::Result;
use crate::model::{DistortionMatrix, Pmf};
use crate::scalar::Real;

const BA_MAX_ITER: usize = 100_000;
const SLOPE_CAP: f64 = 1e6;

/// Output of one Blahut-Arimoto run.
#[derive(Debug, Clone)]
pub struct BlahutPoint<T> {
    pub slope: T,
    pub rate_bits: T,
    pub distortion: T,
    /// Optimal output law on the reproduction alphabet.
    pub output: Vec<T>,
    pub iterations: usize,
}

/// Rate and distortion of the test channel minimizing `I + s * E[rho]`
/// with the output law left free.
pub fn blahut_arimoto<T: Real>(mu: &Pmf<T>, rho: &DistortionMatrix<T>, slope: T) -> Result<BlahutPoint<T>> {
    rho.check_shape(mu.len(), rho.cols())?;
    let (m, n) = (mu.len(), rho.cols());
    let mut q = vec![T::one() / T::from_usize(n); n];
    let mut channel = vec![T::zero(); m * n];
    let tol = T::lit(1e-14);
    let mut iterations = 0;
    // shift each row by its minimum cost so the weights never all underflow
    let shifted: Vec<T> = (0..m)
        .flat_map(|x| {
            let row = rho.row(x);
            let low = row.iter().copied().fold(T::infinity(), Float::min);
            row.iter().map(move |&c| (-slope * (c - low)).exp()).collect::<Vec<_>>()
        })
        .collect();
    loop {
        iterations += 1;
        for x in 0..m {
            let w = &shifted[x * n..(x + 1) * n];
            let z = (0..n).fold(T::zero(), |s, y| s + q[y] * w[y]);
            for y in 0..n {
                channel[x * n + y] = q[y] * w[y] / z;
            }
        }
        let next: Vec<T> = (0..n)
            .map(|y| (0..m).fold(T::zero(), |s, x| s + mu.mass()[x] * channel[x * n + y]))
            .collect();
        let change = next
            .iter()
            .zip(&q)
            .fold(T::zero(), |s, (a, b)| Float::max(s, Float::abs(*a - *b)));
        q = next;
        if change <= tol || iterations >= BA_MAX_ITER {
            break;
        }
    }
    let mut rate = T::zero();
    let mut dist = T::zero();
    for x in 0..m {
        let px = mu.mass()[x];
        for y in 0..n {
            let c = channel[x * n + y];
            if c > T::zero() && px > T::zero() {
                rate = rate + px * c * (c / q[y]).log2();
                dist = dist + px * c * *rho.get(x, y);
            }
        }
    }
    Ok(BlahutPoint {
        slope,
        rate_bits: Float::max(rate, T::zero()),
        distortion: dist,
        output: q,
        iterations,
    })
}

/// `D(mu, r)`: smallest distortion at rate `r` bits over all output laws on
/// the reproduction alphabet of `rho`.
pub fn d_classic<T: Real>(mu: &Pmf<T>, rho: &DistortionMatrix<T>, r: T) -> Result<T> {
    rho.check_shape(mu.len(), rho.cols())?;
    let best_constant = (0..rho.cols())
        .map(|y| (0..mu.len()).fold(T::zero(), |s, x| s + mu.mass()[x] * *rho.get(x, y)))
        .fold(T::infinity(), Float::min);
    if r.is_nan() || r <= T::zero() {
        return Ok(best_constant);
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut at_hi = blahut_arimoto(mu, rho, hi)?;
    while at_hi.rate_bits < r {
        lo = hi;
        hi = hi + hi;
        if hi > T::lit(SLOPE_CAP) {
            // rate exceeds what any useful channel needs: distortion floor
            let floor = (0..mu.len()).fold(T::zero(), |s, x| {
                s + mu.mass()[x] * rho.row(x).iter().copied().fold(T::infinity(), Float::min)
            });
            return Ok(floor);
        }
        at_hi = blahut_arimoto(mu, rho, hi)?;
    }
    let tol = T::lit(1e-12);
    let mut best = at_hi;
    loop {
        let mid = (lo + hi) / T::lit(2.0);
        if !(mid > lo && mid < hi) {
            break;
        }
        let p = blahut_arimoto(mu, rho, mid)?;
        let done = Float::abs(p.rate_bits - r) <= tol;
        if p.rate_bits < r {
            lo = mid;
        } else {
            hi = mid;
            best = p.clone();
        }
        if done {
            best = p;
            break;
        }
    }
    Ok(Float::min(best.distortion, best_constant))
}
