//! The three equivalent descriptions of a randomized quantizer on finite
//! alphabets and the exact conversions between them.
//!
//! * Model 1: an encoder `e(x, z)` into `{0..M-1}` and a decoder `d(i, z)`,
//!   sharing randomness `Z ~ nu`.
//! * Model 2: a single table `q(x, z)` with at most `M` outputs per column.
//! * Model 3: a finite mixture of deterministic `M`-level quantizers, i.e. a
//!   probability measure on the set of induced joint laws.
//!
//! Encoder indices are zero-based throughout.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::pmf::{Alphabet, JointPmf, Pmf};
use crate::scalar::Scalar;

fn distinct(it: impl IntoIterator<Item = usize>) -> usize {
    it.into_iter().collect::<BTreeSet<_>>().len()
}

/// A map `X -> Y` using at most `level_budget` output points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "QuantizerRepr", into = "QuantizerRepr")]
pub struct DeterministicQuantizer {
    map: Vec<usize>,
    level_budget: usize,
    y_size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct QuantizerRepr {
    map: Vec<usize>,
    level_budget: usize,
    y_size: usize,
}

impl TryFrom<QuantizerRepr> for DeterministicQuantizer {
    type Error = Error;
    fn try_from(r: QuantizerRepr) -> Result<Self> {
        DeterministicQuantizer::new(r.map, r.level_budget, r.y_size)
    }
}

impl From<DeterministicQuantizer> for QuantizerRepr {
    fn from(q: DeterministicQuantizer) -> Self {
        QuantizerRepr {
            map: q.map,
            level_budget: q.level_budget,
            y_size: q.y_size,
        }
    }
}

impl DeterministicQuantizer {
    /// `map[x]` is the output index for source index `x`; outputs live in
    /// `0..y_size`.
    pub fn new(map: Vec<usize>, level_budget: usize, y_size: usize) -> Result<Self> {
        if level_budget == 0 {
            return Err(Error::ZeroBudget);
        }
        if let Some(&bad) = map.iter().find(|&&y| y >= y_size) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: y_size,
            });
        }
        let used = distinct(map.iter().copied());
        if used > level_budget {
            return Err(Error::LevelBudgetExceeded {
                used,
                budget: level_budget,
            });
        }
        Ok(Self {
            map,
            level_budget,
            y_size,
        })
    }

    pub fn constant(x_size: usize, y: usize, y_size: usize) -> Result<Self> {
        Self::new(vec![y; x_size], 1, y_size)
    }

    pub fn identity(size: usize) -> Result<Self> {
        Self::new((0..size).collect(), size, size)
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn level_budget(&self) -> usize {
        self.level_budget
    }

    pub fn x_size(&self) -> usize {
        self.map.len()
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn levels_used(&self) -> usize {
        distinct(self.map.iter().copied())
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    /// Same map under a different (larger) budget.
    pub fn with_budget(&self, level_budget: usize) -> Result<Self> {
        Self::new(self.map.clone(), level_budget, self.y_size)
    }
}

/// Joint law of `(X, q(X))` for `X ~ mu`.
pub fn induced_joint<T: Scalar>(q: &DeterministicQuantizer, mu: &Pmf<T>, y_alphabet: &Alphabet) -> Result<JointPmf<T>> {
    if q.x_size() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: q.x_size(),
        });
    }
    if q.y_size() != y_alphabet.len() {
        return Err(Error::DimensionMismatch {
            expected: y_alphabet.len(),
            got: q.y_size(),
        });
    }
    let cols = y_alphabet.len();
    let mut mass = vec![T::zero(); mu.len() * cols];
    for (x, m) in mu.mass().iter().enumerate() {
        mass[x * cols + q.apply(x)] = m.clone();
    }
    Ok(JointPmf::from_parts(mu.alphabet().clone(), y_alphabet.clone(), mass))
}

/// Output law of `q(X)` for `X ~ mu`.
pub fn quantizer_output<T: Scalar>(q: &DeterministicQuantizer, mu: &Pmf<T>) -> Vec<T> {
    let mut out = vec![T::zero(); q.y_size()];
    for (x, m) in mu.mass().iter().enumerate() {
        let y = q.apply(x);
        out[y] = out[y].clone() + m.clone();
    }
    out
}

/// Finitely supported probability measure over `M`-level quantizers
/// (a Model 3 randomized quantizer with finite randomization).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMixtureQuantizer<T: Scalar> {
    y_alphabet: Alphabet,
    level_budget: usize,
    weights: Vec<T>,
    quantizers: Vec<DeterministicQuantizer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent<T> {
    pub weight: T,
    pub map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct MixtureRepr<T> {
    y_alphabet: Alphabet,
    level_budget: usize,
    components: Vec<MixtureComponent<T>>,
}

impl<T: Scalar + Serialize> Serialize for FiniteMixtureQuantizer<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureRepr {
            y_alphabet: self.y_alphabet.clone(),
            level_budget: self.level_budget,
            components: self.components(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for FiniteMixtureQuantizer<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MixtureRepr::<T>::deserialize(d)?;
        let ys = r.y_alphabet.len();
        let mut weights = Vec::new();
        let mut quantizers = Vec::new();
        for c in r.components {
            weights.push(c.weight);
            quantizers.push(DeterministicQuantizer::new(c.map, r.level_budget, ys).map_err(serde::de::Error::custom)?);
        }
        FiniteMixtureQuantizer::new(r.y_alphabet, weights, quantizers).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> FiniteMixtureQuantizer<T> {
    pub fn new(y_alphabet: Alphabet, weights: Vec<T>, quantizers: Vec<DeterministicQuantizer>) -> Result<Self> {
        if weights.len() != quantizers.len() {
            return Err(Error::DimensionMismatch {
                expected: quantizers.len(),
                got: weights.len(),
            });
        }
        let first = quantizers.first().ok_or(Error::InconsistentMixture)?;
        let (xs, budget) = (first.x_size(), first.level_budget());
        if quantizers
            .iter()
            .any(|q| q.x_size() != xs || q.level_budget() != budget || q.y_size() != y_alphabet.len())
        {
            return Err(Error::InconsistentMixture);
        }
        // reuse pmf validation for the weights
        Pmf::from_masses(weights.clone())?;
        Ok(Self {
            y_alphabet,
            level_budget: budget,
            weights,
            quantizers,
        })
    }

    pub fn single(y_alphabet: Alphabet, q: DeterministicQuantizer) -> Result<Self> {
        Self::new(y_alphabet, vec![T::one()], vec![q])
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn quantizers(&self) -> &[DeterministicQuantizer] {
        &self.quantizers
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn level_budget(&self) -> usize {
        self.level_budget
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn components(&self) -> Vec<MixtureComponent<T>> {
        self.weights
            .iter()
            .zip(&self.quantizers)
            .map(|(w, q)| MixtureComponent {
                weight: w.clone(),
                map: q.map().to_vec(),
            })
            .collect()
    }
}

/// `sum_i w_i * induced_joint(q_i, mu)`.
pub fn mixture_joint<T: Scalar>(m: &FiniteMixtureQuantizer<T>, mu: &Pmf<T>) -> Result<JointPmf<T>> {
    let cols = m.y_alphabet().len();
    let mut mass = vec![T::zero(); mu.len() * cols];
    for (w, q) in m.weights().iter().zip(m.quantizers()) {
        let joint = induced_joint(q, mu, m.y_alphabet())?;
        for (acc, v) in mass.iter_mut().zip(joint.mass()) {
            *acc = acc.clone() + w.clone() * v.clone();
        }
    }
    Ok(JointPmf::from_parts(
        mu.alphabet().clone(),
        m.y_alphabet().clone(),
        mass,
    ))
}

/// Model 2: `Y = table[x][z]` with `Z ~ nu` independent of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Model2Repr<T>",
    into = "Model2Repr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Model2Quantizer<T: Scalar> {
    table: Vec<Vec<usize>>,
    nu: Pmf<T>,
    y_alphabet: Alphabet,
    level_budget: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    rename_all = "camelCase",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Model2Repr<T: Scalar> {
    z_alphabet: Alphabet,
    table: Vec<Vec<usize>>,
    nu: Pmf<T>,
    y_alphabet: Alphabet,
    level_budget: usize,
}

impl<T: Scalar> TryFrom<Model2Repr<T>> for Model2Quantizer<T> {
    type Error = Error;
    fn try_from(r: Model2Repr<T>) -> Result<Self> {
        if &r.z_alphabet != r.nu.alphabet() {
            return Err(Error::InvalidParameter(
                "zAlphabet differs from the alphabet of nu".into(),
            ));
        }
        Model2Quantizer::new(r.table, r.nu, r.y_alphabet, r.level_budget)
    }
}

impl<T: Scalar> From<Model2Quantizer<T>> for Model2Repr<T> {
    fn from(m: Model2Quantizer<T>) -> Self {
        Model2Repr {
            z_alphabet: m.nu.alphabet().clone(),
            table: m.table,
            nu: m.nu,
            y_alphabet: m.y_alphabet,
            level_budget: m.level_budget,
        }
    }
}

impl<T: Scalar> Model2Quantizer<T> {
    /// `table[x][z]` indexes `y_alphabet`; `nu` lives on the randomizer
    /// alphabet `Z` whose size must match the table width.
    pub fn new(table: Vec<Vec<usize>>, nu: Pmf<T>, y_alphabet: Alphabet, level_budget: usize) -> Result<Self> {
        if level_budget == 0 {
            return Err(Error::ZeroBudget);
        }
        let zs = nu.len();
        for row in &table {
            if row.len() != zs {
                return Err(Error::DimensionMismatch {
                    expected: zs,
                    got: row.len(),
                });
            }
            if let Some(&bad) = row.iter().find(|&&y| y >= y_alphabet.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    size: y_alphabet.len(),
                });
            }
        }
        for z in 0..zs {
            let used = distinct(table.iter().map(|row| row[z]));
            if used > level_budget {
                return Err(Error::LevelBudgetExceeded {
                    used,
                    budget: level_budget,
                });
            }
        }
        Ok(Self {
            table,
            nu,
            y_alphabet,
            level_budget,
        })
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn nu(&self) -> &Pmf<T> {
        &self.nu
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        self.nu.alphabet()
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn level_budget(&self) -> usize {
        self.level_budget
    }

    pub fn x_size(&self) -> usize {
        self.table.len()
    }

    /// The deterministic quantizer `x -> table[x][z]` for a fixed `z`.
    pub fn column(&self, z: usize) -> DeterministicQuantizer {
        DeterministicQuantizer {
            map: self.table.iter().map(|row| row[z]).collect(),
            level_budget: self.level_budget,
            y_size: self.y_alphabet.len(),
        }
    }
}

/// Each randomizer value selects one deterministic
/// quantizer, weighted by `nu(z)`.
pub fn model2_to_model3<T: Scalar>(m2: &Model2Quantizer<T>) -> FiniteMixtureQuantizer<T> {
    let quantizers = (0..m2.nu().len()).map(|z| m2.column(z)).collect();
    FiniteMixtureQuantizer {
        y_alphabet: m2.y_alphabet().clone(),
        level_budget: m2.level_budget(),
        weights: m2.nu().mass().to_vec(),
        quantizers,
    }
}

/// Model 1: encoder into `M` indices and a `z`-dependent decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Model1Repr<T>",
    into = "Model1Repr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Model1Code<T: Scalar> {
    encoder: Vec<Vec<usize>>,
    decoder: Vec<Vec<usize>>,
    nu: Pmf<T>,
    y_alphabet: Alphabet,
}

#[derive(Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    rename_all = "camelCase",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Model1Repr<T: Scalar> {
    encoder: Vec<Vec<usize>>,
    decoder: Vec<Vec<usize>>,
    nu: Pmf<T>,
    y_alphabet: Alphabet,
}

impl<T: Scalar> TryFrom<Model1Repr<T>> for Model1Code<T> {
    type Error = Error;
    fn try_from(r: Model1Repr<T>) -> Result<Self> {
        Model1Code::new(r.encoder, r.decoder, r.nu, r.y_alphabet)
    }
}

impl<T: Scalar> From<Model1Code<T>> for Model1Repr<T> {
    fn from(m: Model1Code<T>) -> Self {
        Model1Repr {
            encoder: m.encoder,
            decoder: m.decoder,
            nu: m.nu,
            y_alphabet: m.y_alphabet,
        }
    }
}

impl<T: Scalar> Model1Code<T> {
    /// `encoder[x][z]` in `0..M`, `decoder[i][z]` indexes `y_alphabet`,
    /// where `M = decoder.len()`.
    pub fn new(encoder: Vec<Vec<usize>>, decoder: Vec<Vec<usize>>, nu: Pmf<T>, y_alphabet: Alphabet) -> Result<Self> {
        let zs = nu.len();
        let m = decoder.len();
        if m == 0 {
            return Err(Error::ZeroBudget);
        }
        for row in encoder.iter().chain(&decoder) {
            if row.len() != zs {
                return Err(Error::DimensionMismatch {
                    expected: zs,
                    got: row.len(),
                });
            }
        }
        if let Some(&bad) = encoder.iter().flatten().find(|&&i| i >= m) {
            return Err(Error::IndexOutOfRange { index: bad, size: m });
        }
        if let Some(&bad) = decoder.iter().flatten().find(|&&y| y >= y_alphabet.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: y_alphabet.len(),
            });
        }
        Ok(Self {
            encoder,
            decoder,
            nu,
            y_alphabet,
        })
    }

    pub fn encoder(&self) -> &[Vec<usize>] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[Vec<usize>] {
        &self.decoder
    }

    pub fn nu(&self) -> &Pmf<T> {
        &self.nu
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn index_count(&self) -> usize {
        self.decoder.len()
    }
}

/// Compose decoder with encoder for every randomizer value.
pub fn model1_to_model2<T: Scalar>(m1: &Model1Code<T>) -> Result<Model2Quantizer<T>> {
    let table = m1
        .encoder()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(z, &i)| {
                    m1.decoder().get(i).map(|d| d[z]).ok_or(Error::IndexOutOfRange {
                        index: i,
                        size: m1.index_count(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Model2Quantizer::new(table, m1.nu().clone(), m1.y_alphabet().clone(), m1.index_count())
}

/// Split each column into an index assignment (by first occurrence while
/// scanning `x` upward) and a decoder listing the outputs in that order.
/// Unused decoder slots repeat the first output of the column.
pub fn model2_to_model1<T: Scalar>(m2: &Model2Quantizer<T>) -> Model1Code<T> {
    let xs = m2.x_size();
    let zs = m2.nu().len();
    let m = m2.level_budget();
    let mut encoder = vec![vec![0usize; zs]; xs];
    let mut decoder = vec![vec![0usize; zs]; m];
    for z in 0..zs {
        let mut seen: Vec<usize> = Vec::with_capacity(m);
        for (x, row) in m2.table().iter().enumerate() {
            let y = row[z];
            let idx = match seen.iter().position(|&s| s == y) {
                Some(i) => i,
                None => {
                    seen.push(y);
                    seen.len() - 1
                }
            };
            encoder[x][z] = idx;
        }
        let fill = seen.first().copied().unwrap_or(0);
        for (i, slot) in decoder.iter_mut().enumerate() {
            slot[z] = seen.get(i).copied().unwrap_or(fill);
        }
    }
    Model1Code {
        encoder,
        decoder,
        nu: m2.nu().clone(),
        y_alphabet: m2.y_alphabet().clone(),
    }
}
