use rand::Rng;

use crate::error::{Error, Result};
use crate::model::JointPmf;
use crate::scalar::Scalar;

/// Draws `Y` from the conditional law of a coupling given `X = x`.
#[derive(Debug, Clone)]
pub struct CouplingSampler {
    cdfs: Vec<Option<Vec<f64>>>,
}

impl CouplingSampler {
    pub fn new<T: Scalar>(coupling: &JointPmf<T>) -> Self {
        let cdfs = (0..coupling.rows())
            .map(|x| {
                let row: Vec<f64> = coupling.row(x).iter().map(Scalar::to_f64).collect();
                let total: f64 = row.iter().sum();
                (total > 0.0).then(|| {
                    let mut acc = 0.0;
                    row.iter()
                        .map(|m| {
                            acc += m / total;
                            acc
                        })
                        .collect()
                })
            })
            .collect();
        Self { cdfs }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        let cdf = self
            .cdfs
            .get(x)
            .ok_or(Error::IndexOutOfRange {
                index: x,
                size: self.cdfs.len(),
            })?
            .as_ref()
            .ok_or(Error::ZeroMassCondition(x))?;
        Ok(draw_from_cdf(cdf, rng))
    }
}

pub(crate) fn draw_from_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    let k = cdf.partition_point(|&c| c <= u);
    // skip zero-width cells left by rounding at the top end
    k.min(cdf.len() - 1)
}

/// Index drawn with probability proportional to `mass`.
pub(crate) fn draw_index<T: Scalar, R: Rng + ?Sized>(mass: &[T], rng: &mut R) -> usize {
    let mut acc = 0.0;
    let cdf: Vec<f64> = mass
        .iter()
        .map(|m| {
            acc += m.to_f64();
            acc
        })
        .collect();
    draw_from_cdf(&cdf, rng)
}

/// One draw of `Y | X = x` from a coupling.
pub fn coupling_sampler<T: Scalar, R: Rng + ?Sized>(coupling: &JointPmf<T>, x: usize, rng: &mut R) -> Result<usize> {
    CouplingSampler::new(coupling).sample(x, rng)
}

/// Maximal coupling of two mass vectors on a common alphabet: the diagonal
/// carries `min(p, q)` and the excesses are coupled independently, so
/// `P(X != Y) = TV(p, q)`. Row-major `|p| x |q|`.
pub fn maximal_coupling<T: Scalar>(p: &[T], q: &[T]) -> Vec<T> {
    let k = p.len();
    assert_eq!(k, q.len(), "maximal coupling needs a common alphabet");
    let overlap: Vec<T> = p.iter().zip(q).map(|(a, b)| T::min_of(a, b)).collect();
    let rp: Vec<T> = p.iter().zip(&overlap).map(|(a, o)| a.clone() - o.clone()).collect();
    let rq: Vec<T> = q.iter().zip(&overlap).map(|(b, o)| b.clone() - o.clone()).collect();
    let tv = T::sum(&rp);
    let mut out = vec![T::zero(); k * k];
    for a in 0..k {
        out[a * k + a] = overlap[a].clone();
    }
    if tv > T::zero() {
        for a in 0..k {
            if rp[a].is_zero() {
                continue;
            }
            for b in 0..k {
                if !rq[b].is_zero() {
                    out[a * k + b] = out[a * k + b].clone() + rp[a].clone() * rq[b].clone() / tv.clone();
                }
            }
        }
    }
    out
}

/// Conditional law of `Y` given `X = a` under the maximal coupling of `p`
/// (law of `X`) and `q` (law of `Y`). Requires `p[a] > 0`.
pub fn maximal_coupling_row<T: Scalar>(p: &[T], q: &[T], a: usize) -> Result<Vec<T>> {
    if p[a] <= T::zero() {
        return Err(Error::ZeroMassCondition(a));
    }
    let k = p.len();
    let stay = T::min_of(&p[a], &q[a]);
    let excess_a = p[a].clone() - stay.clone();
    let mut row = vec![T::zero(); k];
    row[a] = stay / p[a].clone();
    if excess_a > T::zero() {
        let tv = p
            .iter()
            .zip(q)
            .fold(T::zero(), |acc, (x, y)| acc + (x.clone() - T::min_of(x, y)));
        for b in 0..k {
            let rq = q[b].clone() - T::min_of(&p[b], &q[b]);
            if rq > T::zero() {
                row[b] = row[b].clone() + excess_a.clone() * rq / (tv.clone() * p[a].clone());
            }
        }
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, Pmf};
    use crate::scalar::{ratio, Rational};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn bin() -> Alphabet {
        Alphabet::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn deterministic_and_diagonal_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = JointPmf::<f64>::from_rows(bin(), bin(), vec![vec![0.0, 0.4], vec![0.6, 0.0]]).unwrap();
        let s = CouplingSampler::new(&j);
        for _ in 0..100 {
            assert_eq!(s.sample(0, &mut rng).unwrap(), 1);
            assert_eq!(s.sample(1, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn zero_mass_row_is_an_error() {
        let j = JointPmf::<f64>::from_rows(bin(), bin(), vec![vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(coupling_sampler(&j, 0, &mut rng), Err(Error::ZeroMassCondition(0)));
    }

    #[test]
    fn product_coupling_rows_follow_psi() {
        let three = Alphabet::indices(3).unwrap();
        let mu = Pmf::<f64>::new(bin(), vec![0.3, 0.7]).unwrap();
        let psi = Pmf::<f64>::new(three, vec![0.2, 0.5, 0.3]).unwrap();
        let j = JointPmf::product(&mu, &psi);
        let s = CouplingSampler::new(&j);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for t in 0..draws {
            counts[s.sample(t % 2, &mut rng).unwrap()] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(psi.mass())
            .map(|(&c, p)| {
                let e = p * draws as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let p_value = ChiSquared::new(2.0).unwrap().sf(stat);
        assert!(p_value > 0.01, "p = {p_value}");
    }

    #[test]
    fn maximal_coupling_exact() {
        let p = vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)];
        let q = vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)];
        let c: Vec<Rational> = maximal_coupling(&p, &q);
        let k = 3;
        for a in 0..k {
            let row: Rational = (0..k).fold(ratio(0, 1), |s, b| s + c[a * k + b].clone());
            let col: Rational = (0..k).fold(ratio(0, 1), |s, b| s + c[b * k + a].clone());
            assert_eq!(row, p[a]);
            assert_eq!(col, q[a]);
            let cond = maximal_coupling_row(&p, &q, a).unwrap();
            for b in 0..k {
                assert_eq!(cond[b].clone() * p[a].clone(), c[a * k + b]);
            }
        }
        let off: Rational = (0..k * k)
            .filter(|i| i / k != i % k)
            .fold(ratio(0, 1), |s, i| s + c[i].clone());
        // TV = 1/4 + 1/12
        assert_eq!(off, ratio(1, 3));
    }
}
