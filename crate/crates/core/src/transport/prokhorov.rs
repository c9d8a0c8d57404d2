//! Prokhorov distance between pmfs on a small finite metric space, from the
//! two-sided blow-up inequalities
//! `a(A) <= b(A^alpha) + alpha` and `b(A) <= a(A^alpha) + alpha`
//! over every subset `A`, where `A^alpha = {e : min_{e' in A} d(e, e') < alpha}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Alphabet, Pmf};
use crate::scalar::Scalar;

/// Largest alphabet handled by subset enumeration.
pub const PROKHOROV_LIMIT: usize = 20;

/// Symmetric distance table with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    size: usize,
    d: Vec<f64>,
}

impl Metric {
    pub fn new(size: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: d.len(),
            });
        }
        for i in 0..size {
            if d[i * size + i] != 0.0 {
                return Err(Error::InvalidParameter("metric diagonal must be zero".into()));
            }
            for j in 0..size {
                let v = d[i * size + j];
                if !(v >= 0.0 && v.is_finite()) || v != d[j * size + i] {
                    return Err(Error::InvalidParameter(format!(
                        "metric entry ({i},{j}) must be finite, nonnegative and symmetric"
                    )));
                }
            }
        }
        Ok(Self { size, d })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        Self::new(n, rows.into_iter().flatten().collect())
    }

    /// `|x - y|` on labels.
    pub fn absolute(alphabet: &Alphabet) -> Self {
        let p = alphabet.points();
        let d = p.iter().flat_map(|a| p.iter().map(move |b| (a - b).abs())).collect();
        Self { size: p.len(), d }
    }

    /// `1` off the diagonal.
    pub fn discrete(size: usize) -> Self {
        let d = (0..size * size)
            .map(|k| if k / size == k % size { 0.0 } else { 1.0 })
            .collect();
        Self { size, d }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.size + j]
    }

    /// Bitmask of points within `radius` of `e` (strict or closed).
    pub fn neighbourhood(&self, e: usize, radius: f64, closed: bool) -> u32 {
        (0..self.size)
            .filter(|&f| {
                let d = self.get(e, f);
                if closed {
                    d <= radius
                } else {
                    d < radius
                }
            })
            .fold(0u32, |m, f| m | (1 << f))
    }
}

/// Blow-up of the subset `mask` by `radius`.
pub fn blowup(metric: &Metric, mask: u32, radius: f64, closed: bool) -> u32 {
    (0..metric.size())
        .filter(|&e| mask & (1 << e) != 0)
        .fold(0u32, |acc, e| acc | metric.neighbourhood(e, radius, closed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProkhorovResult {
    /// Feasible end of the final bisection bracket.
    pub distance: f64,
    /// Subset violating the inequalities just below `distance`.
    pub witness_set: u32,
    /// `true` when the witness violates `a(A) <= b(A^alpha) + alpha`,
    /// `false` when it violates the mirrored inequality.
    pub witness_forward: bool,
}

/// Masses of every subset, indexed by bitmask.
pub(crate) fn subset_masses(mass: &[f64]) -> Vec<f64> {
    let k = mass.len();
    let mut out = vec![0.0; 1 << k];
    for s in 1usize..(1 << k) {
        let low = s.trailing_zeros() as usize;
        out[s] = out[s & (s - 1)] + mass[low];
    }
    out
}

struct Strassen {
    k: usize,
    ma: Vec<f64>,
    mb: Vec<f64>,
    blown: Vec<u32>,
}

impl Strassen {
    /// Largest violation at `alpha` and the subset attaining it.
    fn worst(&mut self, metric: &Metric, alpha: f64) -> (f64, u32, bool) {
        let nbhd: Vec<u32> = (0..self.k).map(|e| metric.neighbourhood(e, alpha, false)).collect();
        let mut worst = (f64::NEG_INFINITY, 0u32, true);
        for s in 1usize..(1 << self.k) {
            let low = s.trailing_zeros() as usize;
            self.blown[s] = self.blown[s & (s - 1)] | nbhd[low];
            let b = self.blown[s] as usize;
            let fwd = self.ma[s] - self.mb[b] - alpha;
            let bwd = self.mb[s] - self.ma[b] - alpha;
            if fwd > worst.0 {
                worst = (fwd, s as u32, true);
            }
            if bwd > worst.0 {
                worst = (bwd, s as u32, false);
            }
        }
        worst
    }
}

/// Bisection (to `1e-9`) for the smallest `alpha` satisfying every
/// blow-up inequality.
pub fn prokhorov_distance<T: Scalar>(a: &Pmf<T>, b: &Pmf<T>, metric: &Metric) -> Result<ProkhorovResult> {
    let k = a.len();
    if k > PROKHOROV_LIMIT {
        return Err(Error::SupportTooLarge {
            size: k,
            limit: PROKHOROV_LIMIT,
        });
    }
    if b.len() != k || metric.size() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: if b.len() != k { b.len() } else { metric.size() },
        });
    }
    let fa: Vec<f64> = a.mass().iter().map(Scalar::to_f64).collect();
    let fb: Vec<f64> = b.mass().iter().map(Scalar::to_f64).collect();
    // the infimum is 0 exactly when the laws agree; bisection would stop at 1e-9
    if fa == fb {
        return Ok(ProkhorovResult {
            distance: 0.0,
            witness_set: 0,
            witness_forward: true,
        });
    }
    let mut st = Strassen {
        k,
        ma: subset_masses(&fa),
        mb: subset_masses(&fb),
        blown: vec![0; 1 << k],
    };
    const SLACK: f64 = 1e-14;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut witness = st.worst(metric, lo);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let w = st.worst(metric, mid);
        if w.0 <= SLACK {
            hi = mid;
        } else {
            lo = mid;
            witness = w;
        }
    }
    Ok(ProkhorovResult {
        distance: hi,
        witness_set: witness.1,
        witness_forward: witness.2,
    })
}
