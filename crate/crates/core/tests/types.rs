use oclab::model::Pmf;
use oclab::types::{
    closest_ntype, conditional_remaining, normalized_type_kl, sample_uniform_type_class, type_class_info,
    type_class_log_size, type_class_size, NType,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pmf() -> impl Strategy<Value = Pmf<f64>> {
    prop::collection::vec(0.01f64..1.0, 2..=4).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        let mut m: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let head: f64 = m[..m.len() - 1].iter().sum();
        *m.last_mut().unwrap() = 1.0 - head;
        Pmf::from_masses(m).unwrap()
    })
}

/// Smallest l1 distance from `psi` over all n-types, by enumeration.
fn brute_l1(psi: &[f64], n: usize) -> f64 {
    fn rec(psi: &[f64], n: usize, left: usize, acc: f64, best: &mut f64) {
        if psi.len() == 1 {
            *best = best.min(acc + (left as f64 / n as f64 - psi[0]).abs());
            return;
        }
        for c in 0..=left {
            rec(&psi[1..], n, left - c, acc + (c as f64 / n as f64 - psi[0]).abs(), best);
        }
    }
    let mut best = f64::INFINITY;
    rec(psi, n, n, 0.0, &mut best);
    best
}

fn words(k: usize, n: usize) -> Vec<Vec<usize>> {
    (0..k.pow(n as u32))
        .map(|mut v| {
            (0..n)
                .map(|_| {
                    let d = v % k;
                    v /= k;
                    d
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closest_type_is_l1_optimal(psi in pmf(), n in 1usize..=12) {
        let t = closest_ntype(&psi, n).unwrap();
        prop_assert_eq!(t.n(), n);
        let l1: f64 = t.counts().iter().zip(psi.mass()).map(|(&c, p)| (c as f64 / n as f64 - p).abs()).sum();
        prop_assert!(l1 <= brute_l1(psi.mass(), n) + 1e-12);
    }

    #[test]
    fn divergence_sandwich(psi in pmf(), n in 1usize..=200) {
        let k = normalized_type_kl(&psi, n).unwrap();
        prop_assert!(k.sandwich_holds(), "{k:?}");
        prop_assert!(type_class_info(&psi, n).unwrap().size_bounds_hold());
    }

    #[test]
    fn uniform_draws_stay_in_the_class(counts in prop::collection::vec(0usize..5, 2..=4), seed: u64) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let t = NType::new(counts.clone()).unwrap();
        let seq = sample_uniform_type_class(&t, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(NType::of_sequence(&seq, counts.len()).unwrap(), t);
    }
}

#[test]
fn class_sizes_match_enumeration() {
    for n in 1..=7 {
        let mut seen = std::collections::BTreeMap::new();
        for w in words(3, n) {
            *seen.entry(NType::of_sequence(&w, 3).unwrap().counts().to_vec()).or_insert(0u64) += 1;
        }
        for (counts, size) in seen {
            let t = NType::new(counts).unwrap();
            assert_eq!(type_class_size(&t), size.into());
            assert!((type_class_log_size(&t) - (size as f64).log2()).abs() < 1e-12);
        }
    }
}

#[test]
fn remaining_counts_drive_the_next_symbol() {
    let t = NType::new(vec![3, 1]).unwrap();
    let p: Vec<f64> = conditional_remaining(&t, &[1, 0]).unwrap();
    assert_eq!(p, vec![2.0 / 3.0, 1.0 / 3.0]);
    assert!(conditional_remaining::<f64>(&t, &[3, 1]).is_err());
}
