//! Method of types: n-types, type-class sizes, uniform sampling from a class
//! and the normalized divergence between the uniform law on a class and the
//! product measure.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::Pmf;
use crate::scalar::Scalar;

/// Largest block length for which class sizes are computed with big integers.
pub const EXACT_SIZE_LIMIT: usize = 2000;

/// Relative gap below which two rounding remainders count as tied.
const TIE_TOL: f64 = 1e-12;

/// Symbol counts of a length-`n` sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "NTypeRepr", into = "NTypeRepr")]
pub struct NType {
    counts: Vec<usize>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NTypeRepr {
    counts: Vec<usize>,
    n: usize,
}

impl TryFrom<NTypeRepr> for NType {
    type Error = Error;
    fn try_from(r: NTypeRepr) -> Result<Self> {
        let t = NType::new(r.counts)?;
        if t.n != r.n {
            return Err(Error::DimensionMismatch {
                expected: t.n,
                got: r.n,
            });
        }
        Ok(t)
    }
}

impl From<NType> for NTypeRepr {
    fn from(t: NType) -> Self {
        Self {
            counts: t.counts,
            n: t.n,
        }
    }
}

impl NType {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self { counts, n })
    }

    /// Type of a sequence over `{0, .., size - 1}`.
    pub fn of_sequence(seq: &[usize], size: usize) -> Result<Self> {
        let mut counts = vec![0; size];
        for &s in seq {
            *counts.get_mut(s).ok_or(Error::IndexOutOfRange { index: s, size })? += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `counts / n`.
    pub fn masses<T: Scalar>(&self) -> Vec<T> {
        let n = T::from_usize(self.n);
        self.counts.iter().map(|&c| T::from_usize(c) / n.clone()).collect()
    }

    /// The type as a pmf on the alphabet of `like`.
    pub fn to_pmf<T: Scalar>(&self, like: &Pmf<T>) -> Result<Pmf<T>> {
        Pmf::new(like.alphabet().clone(), self.masses())
    }

    /// Sorted sequence with the given counts.
    pub fn canonical_sequence(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(y, &c)| std::iter::repeat_n(y, c))
            .collect()
    }

    pub fn entropy_bits(&self) -> f64 {
        let n = self.n as f64;
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    }
}

/// Closest n-type in l1 among types vanishing off the support of `psi`, and
/// whether a tie had to be broken.
///
/// Rounding `n psi` down and handing the leftover units to the largest
/// remainders is l1-optimal. Equal remainders go to the smaller index, which
/// makes the result the lexicographically largest optimal count vector.
pub fn closest_ntype_detailed<T: Scalar>(psi: &Pmf<T>, n: usize) -> Result<(NType, bool)> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be at least 1".into()));
    }
    let scaled: Vec<f64> = psi.mass().iter().map(|p| p.to_f64() * n as f64).collect();
    let mut counts: Vec<usize> = scaled
        .iter()
        .map(|s| (s + TIE_TOL * n as f64).floor() as usize)
        .collect();
    let used: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).filter(|&y| !psi.mass()[y].is_zero()).collect();
    let frac = |y: usize| (scaled[y] - counts[y] as f64).max(0.0);
    let frac_all: Vec<f64> = (0..counts.len()).map(frac).collect();
    order.sort_by(|&a, &b| frac_all[b].total_cmp(&frac_all[a]).then(a.cmp(&b)));
    let mut tie = false;
    if used < n {
        let left = n - used;
        if left > order.len() {
            return Err(Error::NotNormalized(scaled.iter().sum::<f64>() / n as f64));
        }
        for &y in &order[..left] {
            counts[y] += 1;
        }
        if let (Some(&last_in), Some(&first_out)) = (order.get(left - 1), order.get(left)) {
            tie = (frac_all[last_in] - frac_all[first_out]).abs() <= TIE_TOL * n as f64;
        }
    } else if used > n {
        return Err(Error::NotNormalized(scaled.iter().sum::<f64>() / n as f64));
    }
    Ok((NType::new(counts)?, tie))
}

pub fn closest_ntype<T: Scalar>(psi: &Pmf<T>, n: usize) -> Result<NType> {
    closest_ntype_detailed(psi, n).map(|(t, _)| t)
}

/// `n! / prod counts!`.
pub fn type_class_size(t: &NType) -> BigUint {
    // build as a product of binomials to keep intermediates small
    let mut size = BigUint::one();
    let mut placed = 0u64;
    for &c in t.counts() {
        for k in 1..=c as u64 {
            placed += 1;
            size = size * BigUint::from(placed) / BigUint::from(k);
        }
    }
    size
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.log2() + shift as f64
}

/// `log2 |T_n(t)|`; exact big-integer evaluation up to [`EXACT_SIZE_LIMIT`],
/// log-gamma beyond.
pub fn type_class_log_size(t: &NType) -> f64 {
    if t.n() <= EXACT_SIZE_LIMIT {
        return log2_big(&type_class_size(t));
    }
    let ln = ln_gamma(t.n() as f64 + 1.0) - t.counts().iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>();
    ln / std::f64::consts::LN_2
}

/// Summary of the closest type to `psi` and its class.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TypeClassInfo {
    pub ntype: NType,
    pub log_size_bits: f64,
    pub entropy_bits: f64,
    pub kl_to_target_bits: f64,
    /// The closest type was not unique; the documented tie rule picked it.
    pub tie_broken: bool,
}

impl TypeClassInfo {
    /// `n H - |Y| log2(n + 1) <= log2 |T| <= n H`.
    pub fn size_bounds_hold(&self) -> bool {
        let n = self.ntype.n() as f64;
        let nh = n * self.entropy_bits;
        let slack = 1e-9 * nh.max(1.0);
        let lower = nh - self.ntype.len() as f64 * (n + 1.0).log2();
        lower - slack <= self.log_size_bits && self.log_size_bits <= nh + slack
    }
}

fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b > 0.0 { a * (a / b).log2() } else { f64::INFINITY })
        .sum::<f64>()
        .max(0.0)
}

pub fn type_class_info<T: Scalar>(psi: &Pmf<T>, n: usize) -> Result<TypeClassInfo> {
    let (ntype, tie_broken) = closest_ntype_detailed(psi, n)?;
    let target: Vec<f64> = psi.mass().iter().map(Scalar::to_f64).collect();
    Ok(TypeClassInfo {
        log_size_bits: type_class_log_size(&ntype),
        entropy_bits: ntype.entropy_bits(),
        kl_to_target_bits: kl_bits(&ntype.masses::<f64>(), &target),
        ntype,
        tie_broken,
    })
}

/// Uniform draw from the type class: a Fisher-Yates shuffle of the
/// canonical sequence.
pub fn sample_uniform_type_class<R: Rng + ?Sized>(t: &NType, rng: &mut R) -> Vec<usize> {
    let mut seq = t.canonical_sequence();
    seq.shuffle(rng);
    seq
}

/// Law of the next symbol of a uniform class draw given the counts already
/// emitted: proportional to the remaining counts.
pub fn conditional_remaining<T: Scalar>(t: &NType, prefix: &[usize]) -> Result<Vec<T>> {
    if prefix.len() != t.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            got: prefix.len(),
        });
    }
    if let Some(y) = (0..t.len()).find(|&y| prefix[y] > t.counts()[y]) {
        return Err(Error::InvalidParameter(format!(
            "prefix uses symbol {y} more often than the type"
        )));
    }
    let left = t.n() - prefix.iter().sum::<usize>();
    if left == 0 {
        return Err(Error::TypeExhausted);
    }
    let left = T::from_usize(left);
    Ok((0..t.len())
        .map(|y| T::from_usize(t.counts()[y] - prefix[y]) / left.clone())
        .collect())
}

/// `(1/n) D(uniform on T_n(psi_n) || psi^n)` in bits, with the sandwich
/// `KL(psi_n || psi) <= value <= KL(psi_n || psi) + |Y| log2(n + 1) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizedKl {
    pub n: usize,
    pub value_bits: f64,
    pub lower_bits: f64,
    pub upper_bits: f64,
}

impl NormalizedKl {
    pub fn nats(&self) -> f64 {
        self.value_bits * std::f64::consts::LN_2
    }

    pub fn sandwich_holds(&self) -> bool {
        let slack = 1e-12;
        self.lower_bits - slack <= self.value_bits && self.value_bits <= self.upper_bits + slack
    }
}

/// Every sequence of the class has probability `2^{-n (H + KL)}` under
/// `psi^n`, so the divergence of the uniform law is
/// `n (H + KL) - log2 |T|`.
pub fn normalized_type_kl<T: Scalar>(psi: &Pmf<T>, n: usize) -> Result<NormalizedKl> {
    let info = type_class_info(psi, n)?;
    let nf = n as f64;
    let value = ((nf * (info.entropy_bits + info.kl_to_target_bits) - info.log_size_bits) / nf).max(0.0);
    Ok(NormalizedKl {
        n,
        value_bits: value,
        lower_bits: info.kl_to_target_bits,
        upper_bits: info.kl_to_target_bits + info.ntype.len() as f64 * (nf + 1.0).log2() / nf,
    })
}
