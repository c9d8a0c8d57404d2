use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordered set of real reproduction or source labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Alphabet {
    points: Vec<f64>,
}

impl Alphabet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() || (i > 0 && points[i - 1] >= *p) {
                return Err(Error::UnsortedAlphabet(i));
            }
        }
        Ok(Self { points })
    }

    /// Labels `0, 1, ..., size - 1`.
    pub fn indices(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| i as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn label(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of an exactly matching label.
    pub fn position(&self, label: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == label)
    }
}

impl TryFrom<Vec<f64>> for Alphabet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<f64> {
    fn from(a: Alphabet) -> Self {
        a.points
    }
}

fn check_masses<T: Scalar>(mass: &[T]) -> Result<()> {
    for (i, m) in mass.iter().enumerate() {
        if *m < T::zero() || !m.to_f64().is_finite() {
            return Err(Error::InvalidMass(i));
        }
    }
    let total = T::sum(mass);
    if (total.clone() - T::one()).abs() > T::mass_tolerance() {
        return Err(Error::NotNormalized(total.to_f64()));
    }
    Ok(())
}

/// Probability mass function over a finite labelled alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "PmfRepr<T>",
    into = "PmfRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Pmf<T: Scalar> {
    alphabet: Alphabet,
    mass: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfRepr<T> {
    alphabet: Alphabet,
    mass: Vec<T>,
}

impl<T: Scalar> TryFrom<PmfRepr<T>> for Pmf<T> {
    type Error = Error;
    fn try_from(r: PmfRepr<T>) -> Result<Self> {
        Pmf::new(r.alphabet, r.mass)
    }
}

impl<T: Scalar> From<Pmf<T>> for PmfRepr<T> {
    fn from(p: Pmf<T>) -> Self {
        PmfRepr {
            alphabet: p.alphabet,
            mass: p.mass,
        }
    }
}

impl<T: Scalar> Pmf<T> {
    pub fn new(alphabet: Alphabet, mass: Vec<T>) -> Result<Self> {
        if mass.len() != alphabet.len() {
            return Err(Error::DimensionMismatch {
                expected: alphabet.len(),
                got: mass.len(),
            });
        }
        check_masses(&mass)?;
        Ok(Self { alphabet, mass })
    }

    /// Convenience constructor on the index alphabet `0..mass.len()`.
    pub fn from_masses(mass: Vec<T>) -> Result<Self> {
        Self::new(Alphabet::indices(mass.len())?, mass)
    }

    /// Construct from `f64` masses, converting exactly into `T`.
    pub fn from_f64(alphabet: Alphabet, mass: &[f64]) -> Result<Self> {
        let converted = mass
            .iter()
            .enumerate()
            .map(|(i, &m)| T::from_f64(m).ok_or(Error::InvalidMass(i)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, converted)
    }

    pub fn point_mass(alphabet: Alphabet, at: usize) -> Result<Self> {
        if at >= alphabet.len() {
            return Err(Error::IndexOutOfRange {
                index: at,
                size: alphabet.len(),
            });
        }
        let mut mass = vec![T::zero(); alphabet.len()];
        mass[at] = T::one();
        Self::new(alphabet, mass)
    }

    pub fn uniform(alphabet: Alphabet) -> Result<Self> {
        let k = T::from_usize(alphabet.len());
        let mass = vec![T::one() / k; alphabet.len()];
        Self::new(alphabet, mass)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn get(&self, i: usize) -> &T {
        &self.mass[i]
    }

    /// Indices carrying strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mass[i] > T::zero()).collect()
    }

    pub fn is_point_mass(&self) -> bool {
        self.support().len() == 1
    }

    /// Expectation of `f(label)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.mass
            .iter()
            .zip(self.alphabet.points())
            .map(|(m, &x)| m.to_f64() * f(x))
            .sum()
    }

    pub fn to_f64(&self) -> Pmf<f64> {
        Pmf {
            alphabet: self.alphabet.clone(),
            mass: self.mass.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Joint probability mass on `X x Y`, stored row-major (`x` indexes rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "JointRepr<T>",
    into = "JointRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct JointPmf<T: Scalar> {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    mass: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct JointRepr<T> {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    shape: [usize; 2],
    mass: Vec<T>,
}

impl<T: Scalar> TryFrom<JointRepr<T>> for JointPmf<T> {
    type Error = Error;
    fn try_from(r: JointRepr<T>) -> Result<Self> {
        if r.shape != [r.x_alphabet.len(), r.y_alphabet.len()] {
            return Err(Error::DimensionMismatch {
                expected: r.x_alphabet.len() * r.y_alphabet.len(),
                got: r.shape[0] * r.shape[1],
            });
        }
        JointPmf::new(r.x_alphabet, r.y_alphabet, r.mass)
    }
}

impl<T: Scalar> From<JointPmf<T>> for JointRepr<T> {
    fn from(j: JointPmf<T>) -> Self {
        JointRepr {
            shape: [j.x_alphabet.len(), j.y_alphabet.len()],
            x_alphabet: j.x_alphabet,
            y_alphabet: j.y_alphabet,
            mass: j.mass,
        }
    }
}

impl<T: Scalar> JointPmf<T> {
    /// `mass` is row-major with `x_alphabet.len()` rows.
    pub fn new(x_alphabet: Alphabet, y_alphabet: Alphabet, mass: Vec<T>) -> Result<Self> {
        let expected = x_alphabet.len() * y_alphabet.len();
        if mass.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: mass.len(),
            });
        }
        check_masses(&mass)?;
        Ok(Self {
            x_alphabet,
            y_alphabet,
            mass,
        })
    }

    pub fn from_rows(x_alphabet: Alphabet, y_alphabet: Alphabet, rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = y_alphabet.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        Self::new(x_alphabet, y_alphabet, rows.into_iter().flatten().collect())
    }

    /// Independent coupling `a ⊗ b`.
    pub fn product(a: &Pmf<T>, b: &Pmf<T>) -> Self {
        let mass = a
            .mass()
            .iter()
            .flat_map(|p| b.mass().iter().map(move |q| p.clone() * q.clone()))
            .collect();
        Self {
            x_alphabet: a.alphabet().clone(),
            y_alphabet: b.alphabet().clone(),
            mass,
        }
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(x_alphabet: Alphabet, y_alphabet: Alphabet, mass: Vec<T>) -> Self {
        debug_assert_eq!(mass.len(), x_alphabet.len() * y_alphabet.len());
        Self {
            x_alphabet,
            y_alphabet,
            mass,
        }
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn rows(&self) -> usize {
        self.x_alphabet.len()
    }

    pub fn cols(&self) -> usize {
        self.y_alphabet.len()
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.mass[x * self.cols() + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        let c = self.cols();
        &self.mass[x * c..(x + 1) * c]
    }

    pub fn x_marginal_masses(&self) -> Vec<T> {
        (0..self.rows()).map(|x| T::sum(self.row(x))).collect()
    }

    pub fn y_marginal_masses(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols()];
        for x in 0..self.rows() {
            for (o, m) in out.iter_mut().zip(self.row(x)) {
                *o = o.clone() + m.clone();
            }
        }
        out
    }

    pub fn x_marginal(&self) -> Pmf<T> {
        Pmf {
            alphabet: self.x_alphabet.clone(),
            mass: self.x_marginal_masses(),
        }
    }

    /// Output (column) marginal.
    pub fn y_marginal(&self) -> Pmf<T> {
        Pmf {
            alphabet: self.y_alphabet.clone(),
            mass: self.y_marginal_masses(),
        }
    }

    pub fn to_f64(&self) -> JointPmf<f64> {
        JointPmf {
            x_alphabet: self.x_alphabet.clone(),
            y_alphabet: self.y_alphabet.clone(),
            mass: self.mass.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Largest absolute cellwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of either marginal from the given targets.
    pub fn marginal_error(&self, mu: &[T], psi: &[T]) -> f64 {
        let xs = self.x_marginal_masses();
        let ys = self.y_marginal_masses();
        xs.iter()
            .zip(mu)
            .chain(ys.iter().zip(psi))
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for JointPmf<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 0..self.rows() {
            let row: Vec<String> = self.row(x).iter().map(|m| m.to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Per-letter distortion table `rho(x, y)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "CostRepr<T>",
    into = "CostRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct DistortionMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    cost: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRepr<T> {
    shape: [usize; 2],
    cost: Vec<T>,
}

impl<T: Scalar> TryFrom<CostRepr<T>> for DistortionMatrix<T> {
    type Error = Error;
    fn try_from(r: CostRepr<T>) -> Result<Self> {
        DistortionMatrix::new(r.shape[0], r.shape[1], r.cost)
    }
}

impl<T: Scalar> From<DistortionMatrix<T>> for CostRepr<T> {
    fn from(d: DistortionMatrix<T>) -> Self {
        CostRepr {
            shape: [d.rows, d.cols],
            cost: d.cost,
        }
    }
}

impl<T: Scalar> DistortionMatrix<T> {
    pub fn new(rows: usize, cols: usize, cost: Vec<T>) -> Result<Self> {
        if cost.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: cost.len(),
            });
        }
        if let Some(i) = cost.iter().position(|c| *c < T::zero() || !c.to_f64().is_finite()) {
            return Err(Error::InvalidCost(i));
        }
        Ok(Self { rows, cols, cost })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: bad.len(),
            });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// `0` where labels coincide, `1` elsewhere.
    pub fn hamming(x: &Alphabet, y: &Alphabet) -> Self {
        let cost = x
            .points()
            .iter()
            .flat_map(|a| {
                y.points()
                    .iter()
                    .map(move |b| if a == b { T::zero() } else { T::one() })
            })
            .collect();
        Self {
            rows: x.len(),
            cols: y.len(),
            cost,
        }
    }

    /// `(x - y)^2` on labels.
    pub fn squared_error(x: &Alphabet, y: &Alphabet) -> Self {
        let cost = x
            .points()
            .iter()
            .flat_map(|a| {
                y.points().iter().map(move |b| {
                    let d = a - b;
                    T::from_f64(d * d).expect("finite labels")
                })
            })
            .collect();
        Self {
            rows: x.len(),
            cols: y.len(),
            cost,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.cost[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.cost[x * self.cols..(x + 1) * self.cols]
    }

    pub fn entries(&self) -> &[T] {
        &self.cost
    }

    pub fn max_entry(&self) -> T {
        self.cost.iter().fold(T::zero(), |acc, c| T::max_of(&acc, c))
    }

    pub fn to_f64(&self) -> DistortionMatrix<f64> {
        DistortionMatrix {
            rows: self.rows,
            cols: self.cols,
            cost: self.cost.iter().map(Scalar::to_f64).collect(),
        }
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: self.rows * self.cols,
            });
        }
        Ok(())
    }
}

/// Distortion given by name or as an explicit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSpec {
    Named(NamedCost),
    Matrix(DistortionMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedCost {
    Hamming,
    Squared,
}

impl CostSpec {
    pub fn resolve(&self, x: &Alphabet, y: &Alphabet) -> Result<DistortionMatrix<f64>> {
        match self {
            CostSpec::Named(NamedCost::Hamming) => Ok(DistortionMatrix::hamming(x, y)),
            CostSpec::Named(NamedCost::Squared) => Ok(DistortionMatrix::squared_error(x, y)),
            CostSpec::Matrix(m) => {
                m.check_shape(x.len(), y.len())?;
                Ok(m.clone())
            }
        }
    }
}

/// Expected distortion `sum v(x,y) rho(x,y)`.
pub fn distortion<T: Scalar>(v: &JointPmf<T>, rho: &DistortionMatrix<T>) -> Result<T> {
    rho.check_shape(v.rows(), v.cols())?;
    Ok(v.mass()
        .iter()
        .zip(rho.entries())
        .fold(T::zero(), |acc, (m, c)| acc + m.clone() * c.clone()))
}

/// Column sums of a joint, as a pmf on the output alphabet.
pub fn output_marginal<T: Scalar>(v: &JointPmf<T>) -> Pmf<T> {
    v.y_marginal()
}

/// `E_{mu ⊗ psi}[rho]`, the cost of the independent coupling.
pub fn product_cost<T: Scalar>(mu: &Pmf<T>, psi: &Pmf<T>, rho: &DistortionMatrix<T>) -> Result<T> {
    distortion(&JointPmf::product(mu, psi), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    fn bin() -> Alphabet {
        Alphabet::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn alphabet_rejects_unsorted_and_empty() {
        assert_eq!(Alphabet::new(vec![]), Err(Error::EmptyAlphabet));
        assert_eq!(Alphabet::new(vec![0.0, 0.0]), Err(Error::UnsortedAlphabet(1)));
        assert!(Alphabet::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::<f64>::new(bin(), vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            Pmf::<f64>::new(bin(), vec![0.5, 0.6]),
            Err(Error::NotNormalized(_))
        ));
        assert_eq!(Pmf::<f64>::new(bin(), vec![-0.5, 1.5]), Err(Error::InvalidMass(0)));
        assert!(matches!(
            Pmf::<f64>::new(bin(), vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        // exact types admit no slack
        let almost = Rational::from_float(0.5 + 1e-15).unwrap();
        assert!(Pmf::<Rational>::new(bin(), vec![almost, ratio(1, 2)]).is_err());
    }

    #[test]
    fn distortion_examples() {
        let diag = JointPmf::<f64>::from_rows(bin(), bin(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let ham = DistortionMatrix::hamming(&bin(), &bin());
        assert_eq!(distortion(&diag, &ham).unwrap(), 0.0);

        let u = Pmf::uniform(bin()).unwrap();
        let prod = JointPmf::product(&u, &u);
        assert_eq!(distortion(&prod, &ham).unwrap(), 0.5);

        let anti = JointPmf::<f64>::from_rows(bin(), bin(), vec![vec![0.0, 0.25], vec![0.75, 0.0]]).unwrap();
        let sq = DistortionMatrix::squared_error(&bin(), &bin());
        assert_eq!(distortion(&anti, &sq).unwrap(), 1.0);

        let wrong = DistortionMatrix::<f64>::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(distortion(&anti, &wrong).is_err());
    }

    #[test]
    fn output_marginal_examples() {
        let diag = JointPmf::<f64>::from_rows(bin(), bin(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(output_marginal(&diag).mass(), &[0.5, 0.5]);
        let mu = Pmf::new(bin(), vec![0.3, 0.7]).unwrap();
        let psi = Pmf::new(bin(), vec![0.25, 0.75]).unwrap();
        let out = output_marginal(&JointPmf::product(&mu, &psi));
        assert!(out
            .mass()
            .iter()
            .zip(psi.mass())
            .all(|(a, b): (&f64, &f64)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn json_shapes() {
        let p = Pmf::<f64>::new(bin(), vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"alphabet":[0.0,1.0],"mass":[0.25,0.75]}"#);
        let back: Pmf<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Pmf<f64>>(r#"{"alphabet":[0,1],"mass":[0.2,0.2]}"#).is_err());
        assert!(serde_json::from_str::<Pmf<f64>>(r#"{"alphabet":[0,1],"mass":[0.5,0.5],"x":1}"#).is_err());

        let j = JointPmf::product(&p, &p);
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.starts_with(r#"{"xAlphabet":[0.0,1.0],"yAlphabet":[0.0,1.0],"shape":[2,2],"mass":"#));
        let back: JointPmf<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);
    }
}
