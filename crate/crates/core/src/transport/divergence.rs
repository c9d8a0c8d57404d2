use crate::model::Pmf;
use crate::scalar::Real;

/// Relative entropy stored in nats; `+inf` when the first argument is not
/// absolutely continuous with respect to the second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Divergence<T> {
    nats: T,
}

impl<T: Real> Divergence<T> {
    pub fn from_nats(nats: T) -> Self {
        Self { nats }
    }

    pub fn nats(&self) -> T {
        self.nats
    }

    pub fn bits(&self) -> T {
        self.nats / T::lit(std::f64::consts::LN_2)
    }

    pub fn is_infinite(&self) -> bool {
        self.nats.is_infinite()
    }
}

/// `sum a log(a / b)`.
pub fn kl_divergence<T: Real>(a: &Pmf<T>, b: &Pmf<T>) -> Divergence<T> {
    let mut nats = T::zero();
    for (&p, &q) in a.mass().iter().zip(b.mass()) {
        if p > T::zero() {
            if q <= T::zero() {
                return Divergence::from_nats(T::infinity());
            }
            nats = nats + p * (p / q).ln();
        }
    }
    Divergence::from_nats(T::max(nats, T::zero()))
}

/// Half the l1 distance.
pub fn tv_distance<T: Real>(a: &Pmf<T>, b: &Pmf<T>) -> T {
    a.mass()
        .iter()
        .zip(b.mass())
        .fold(T::zero(), |acc, (&p, &q)| acc + (p - q).abs())
        / T::lit(2.0)
}

/// Shannon entropy in bits of a mass vector.
pub fn entropy_bits<T: Real>(mass: &[T]) -> T {
    mass.iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |acc, &p| acc - p * p.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alphabet;
    use proptest::prelude::*;

    fn bin() -> Alphabet {
        Alphabet::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let a = Pmf::<f64>::new(bin(), vec![1.0, 0.0]).unwrap();
        let b = Pmf::<f64>::new(bin(), vec![0.5, 0.5]).unwrap();
        assert_eq!(tv_distance(&a, &b), 0.5);
        assert!((kl_divergence(&a, &b).bits() - 1.0).abs() < 1e-15);
        assert!(kl_divergence(&b, &a).is_infinite());
        assert_eq!(kl_divergence(&b, &b).nats(), 0.0);
        assert_eq!(tv_distance(&b, &b), 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let a = Pmf::<f32>::new(bin(), vec![1.0, 0.0]).unwrap();
        let b = Pmf::<f32>::new(bin(), vec![0.5, 0.5]).unwrap();
        assert!((kl_divergence(&a, &b).bits() - 1.0).abs() < 1e-6);
    }

    fn pmf_pair() -> impl Strategy<Value = (Pmf<f64>, Pmf<f64>)> {
        (2usize..6).prop_flat_map(|k| {
            (
                prop::collection::vec(0.01f64..1.0, k),
                prop::collection::vec(0.01f64..1.0, k),
            )
                .prop_map(move |(a, b)| {
                    let norm = |v: Vec<f64>| {
                        let s: f64 = v.iter().sum();
                        let mut m: Vec<f64> = v.iter().map(|x| x / s).collect();
                        let rest: f64 = m[1..].iter().sum();
                        m[0] = 1.0 - rest;
                        Pmf::new(Alphabet::indices(k).unwrap(), m).unwrap()
                    };
                    (norm(a), norm(b))
                })
        })
    }

    proptest! {
        #[test]
        fn pinsker_holds((a, b) in pmf_pair()) {
            let tv = tv_distance(&a, &b);
            let kl = kl_divergence(&a, &b).nats();
            prop_assert!(kl >= 0.0);
            prop_assert!(tv <= (kl / 2.0).sqrt() + 1e-12);
        }
    }
}
