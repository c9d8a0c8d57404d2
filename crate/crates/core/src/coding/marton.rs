//! Sequential maximal coupling between the uniform law on a type class and
//! the product measure `psi^n`.
//!
//! At step `i` the next symbol of the class draw has law
//! `conditional_remaining(past)`; it is coupled maximally with `psi`. The
//! resulting `Y^n` is exactly `psi^n` because each `Y_i` has law `psi` given
//! the whole past, and the expected Hamming mismatch per letter is at most
//! `sqrt(D(uniform class || psi^n) / (2n))` in nats.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Pmf;
use crate::scalar::Scalar;
use crate::transport::{draw_index as draw, maximal_coupling, maximal_coupling_row};
use crate::types::{conditional_remaining, normalized_type_kl, NType};

/// `sqrt(KL_nats / (2n))` with the unnormalized divergence of the uniform
/// class law from `psi^n`.
pub fn marton_bound<T: Scalar>(psi: &Pmf<T>, n: usize) -> Result<f64> {
    let kl = normalized_type_kl(psi, n)?;
    Ok((kl.nats() / 2.0).sqrt())
}

fn masses_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(Scalar::to_f64).collect()
}

/// Joint draw of `(X^n, Y^n)`: `X^n` uniform on the class of `t`, `Y^n`
/// distributed as `psi^n`.
pub fn marton_coupling<T: Scalar, R: Rng + ?Sized>(
    t: &NType,
    psi: &Pmf<T>,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check(t, psi)?;
    let k = t.len();
    let q = masses_f64(psi.mass());
    let mut prefix = vec![0; k];
    let mut xs = Vec::with_capacity(t.n());
    let mut ys = Vec::with_capacity(t.n());
    for _ in 0..t.n() {
        let p: Vec<f64> = conditional_remaining(t, &prefix)?;
        let joint = maximal_coupling(&p, &q);
        let cell = draw(&joint, rng);
        let (x, y) = (cell / k, cell % k);
        prefix[x] += 1;
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Draw `Y^n` given an already realized `X^n` from the class of `t`; same
/// joint law as [`marton_coupling`].
pub fn marton_conditional<T: Scalar, R: Rng + ?Sized>(
    t: &NType,
    psi: &Pmf<T>,
    xs: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    check(t, psi)?;
    let q = masses_f64(psi.mass());
    let mut prefix = vec![0; t.len()];
    let mut ys = Vec::with_capacity(xs.len());
    for &x in xs {
        let p: Vec<f64> = conditional_remaining(t, &prefix)?;
        let row = maximal_coupling_row(&p, &q, x)?;
        ys.push(draw(&row, rng));
        prefix[x] += 1;
    }
    Ok(ys)
}

fn check<T: Scalar>(t: &NType, psi: &Pmf<T>) -> Result<()> {
    if t.len() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            got: psi.len(),
        });
    }
    Ok(())
}

/// `(x sequence, y sequence)`.
pub type SequencePair = (Vec<usize>, Vec<usize>);

/// Exact law of `(X^n, Y^n)` under the sequential coupling, by expanding the
/// whole tree. Keys are `(x sequence, y sequence)`; only for small `n`.
pub fn marton_exact_law<T: Scalar>(t: &NType, psi: &Pmf<T>) -> Result<BTreeMap<SequencePair, T>> {
    check(t, psi)?;
    let k = t.len();
    // (xs, ys, prefix counts, weight)
    #[allow(clippy::type_complexity)]
    let mut frontier: Vec<(Vec<usize>, Vec<usize>, Vec<usize>, T)> = vec![(vec![], vec![], vec![0; k], T::one())];
    for _ in 0..t.n() {
        let mut next = Vec::new();
        for (xs, ys, prefix, w) in frontier {
            let p: Vec<T> = conditional_remaining(t, &prefix)?;
            let joint = maximal_coupling(&p, psi.mass());
            for (cell, m) in joint.into_iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                let (x, y) = (cell / k, cell % k);
                let (mut xs, mut ys, mut prefix) = (xs.clone(), ys.clone(), prefix.clone());
                xs.push(x);
                ys.push(y);
                prefix[x] += 1;
                next.push((xs, ys, prefix, w.clone() * m));
            }
        }
        frontier = next;
    }
    let mut law = BTreeMap::new();
    for (xs, ys, _, w) in frontier {
        let e = law.entry((xs, ys)).or_insert_with(T::zero);
        *e = e.clone() + w;
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;
    use crate::scalar::{ratio, Rational};
    use crate::transport::tv_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bound_value() {
        let u = Pmf::<f64>::from_masses(vec![0.5, 0.5]).unwrap();
        let b = marton_bound(&u, 4).unwrap();
        let direct = (4.0 * 0.25 * (16.0f64 / 6.0).log2() * std::f64::consts::LN_2 / 8.0).sqrt();
        assert!((b - direct).abs() < 1e-15);
        assert!((b - 0.3501).abs() < 1e-4);
    }

    #[test]
    fn single_letter_matching_type_never_mismatches() {
        let psi = Pmf::<f64>::from_masses(vec![0.0, 1.0, 0.0]).unwrap();
        let t = NType::new(vec![0, 1, 0]).unwrap();
        let q: Pmf<f64> = t.to_pmf(&psi).unwrap();
        assert_eq!(tv_distance(&q, &psi), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (x, y) = marton_coupling(&t, &psi, &mut rng).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn exact_two_letter_tree() {
        let psi = Pmf::<Rational>::new(Alphabet::indices(2).unwrap(), vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let t = NType::new(vec![1, 1]).unwrap();
        let law = marton_exact_law(&t, &psi).unwrap();
        let mut y_law: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        let mut x_law: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for ((xs, ys), w) in &law {
            *y_law.entry(ys.clone()).or_insert_with(|| ratio(0, 1)) += w.clone();
            *x_law.entry(xs.clone()).or_insert_with(|| ratio(0, 1)) += w.clone();
        }
        assert_eq!(y_law.len(), 4);
        assert!(y_law.values().all(|w| *w == ratio(1, 4)));
        assert_eq!(x_law.len(), 2);
        assert!(x_law.values().all(|w| *w == ratio(1, 2)));
        // first letter matches always; the forced second letter half the time
        let mismatch: Rational = law
            .iter()
            .map(|((xs, ys), w)| w.clone() * ratio(xs.iter().zip(ys).filter(|(a, b)| a != b).count() as i64, 2))
            .fold(ratio(0, 1), |a, b| a + b);
        assert_eq!(mismatch, ratio(1, 4));
    }

    #[test]
    fn conditional_form_has_the_same_law() {
        let psi = Pmf::<Rational>::new(
            Alphabet::indices(3).unwrap(),
            vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)],
        )
        .unwrap();
        let t = NType::new(vec![1, 1, 1]).unwrap();
        let law = marton_exact_law(&t, &psi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts: BTreeMap<(Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
        let draws = 60_000;
        for _ in 0..draws {
            let xs = crate::types::sample_uniform_type_class(&t, &mut rng);
            let ys = marton_conditional(&t, &psi, &xs, &mut rng).unwrap();
            *counts.entry((xs, ys)).or_default() += 1;
        }
        assert!(counts.keys().all(|k| law.contains_key(k)));
        let stat: f64 = law
            .iter()
            .map(|(k, w)| {
                let e = w.to_f64() * draws as f64;
                let o = *counts.get(k).unwrap_or(&0) as f64;
                (o - e).powi(2) / e
            })
            .sum();
        let p = crate::coding::chi_square_sf(stat, law.len() - 1);
        assert!(p > 0.001, "p = {p}");
    }
}
