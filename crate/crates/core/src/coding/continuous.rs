//! Continuous sources on the real line under squared error: uniform
//! discretization and the analytic costs of the quantile couplings.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{Alphabet, Pmf};

/// Source or target law on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Density {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Degenerate law at one point.
    Point {
        at: f64,
    },
}

impl Density {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Density::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Density::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            Density::Point { at } => at.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid density {self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Density::Gaussian { mean, sd } => std_normal().cdf((x - mean) / sd),
            Density::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Density::Point { at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match *self {
            Density::Gaussian { mean, sd } => mean + sd * std_normal().inverse_cdf(u),
            Density::Uniform { low, high } => low + u * (high - low),
            Density::Point { at } => at,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_cdf(rng.random::<f64>())
    }

    /// `E[(X - c)^2; a < X <= b]`.
    pub fn partial_second_moment(&self, a: f64, b: f64, c: f64) -> f64 {
        match *self {
            Density::Gaussian { mean, sd } => {
                // standardize: X = mean + sd Z, so (X - c)^2 = sd^2 (Z - c')^2
                let (za, zb) = ((a - mean) / sd, (b - mean) / sd);
                let cz = (c - mean) / sd;
                let n = std_normal();
                let phi = |z: f64| if z.is_finite() { n.pdf(z) } else { 0.0 };
                let zphi = |z: f64| if z.is_finite() { z * n.pdf(z) } else { 0.0 };
                let m0 = n.cdf(zb) - n.cdf(za);
                let m1 = phi(za) - phi(zb);
                let m2 = m0 + zphi(za) - zphi(zb);
                sd * sd * (m2 - 2.0 * cz * m1 + cz * cz * m0)
            }
            Density::Uniform { low, high } => {
                let (lo, hi) = (a.max(low), b.min(high));
                if hi <= lo {
                    return 0.0;
                }
                ((hi - c).powi(3) - (lo - c).powi(3)) / (3.0 * (high - low))
            }
            Density::Point { at } => {
                if a < at && at <= b {
                    (at - c).powi(2)
                } else {
                    0.0
                }
            }
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Uniform quantizer with `levels` cells on `[-range, range]`, extended to
/// the line by letting the outer cells absorb the tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub range: f64,
    pub levels: usize,
}

impl Grid {
    pub fn new(range: f64, levels: usize) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) || levels == 0 {
            return Err(Error::InvalidParameter(
                "grid needs range > 0 and at least one level".into(),
            ));
        }
        Ok(Self { range, levels })
    }

    pub fn width(&self) -> f64 {
        2.0 * self.range / self.levels as f64
    }

    /// Cell midpoint.
    pub fn label(&self, j: usize) -> f64 {
        -self.range + (j as f64 + 0.5) * self.width()
    }

    /// `(lower, upper]` boundaries, infinite at the ends.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 {
            f64::NEG_INFINITY
        } else {
            -self.range + j as f64 * self.width()
        };
        let hi = if j + 1 == self.levels {
            f64::INFINITY
        } else {
            -self.range + (j + 1) as f64 * self.width()
        };
        (lo, hi)
    }

    /// Cell containing `x`: the nearest level, ties to the smaller one.
    pub fn index(&self, x: f64) -> usize {
        let t = ((x + self.range) / self.width()).ceil() - 1.0;
        t.clamp(0.0, (self.levels - 1) as f64) as usize
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new((0..self.levels).map(|j| self.label(j)).collect()).expect("increasing labels")
    }

    /// Cell probabilities of `density`.
    pub fn masses(&self, density: &Density) -> Vec<f64> {
        let mut m: Vec<f64> = (0..self.levels)
            .map(|j| {
                let (a, b) = self.cell(j);
                density.cdf(b) - density.cdf(a)
            })
            .collect();
        // clean rounding so the pmf validates
        let total: f64 = m.iter().sum();
        m.iter_mut().for_each(|v| *v = (*v / total).max(0.0));
        m
    }

    /// `E[(X - q(X))^2]`: the cost of the quantile coupling of `density`
    /// with its discretization.
    pub fn discretization_cost(&self, density: &Density) -> f64 {
        (0..self.levels)
            .map(|j| {
                let (a, b) = self.cell(j);
                density.partial_second_moment(a, b, self.label(j))
            })
            .sum()
    }

    /// Draw from `density` conditioned on cell `j`.
    pub fn sample_in_cell<R: Rng + ?Sized>(&self, density: &Density, j: usize, rng: &mut R) -> f64 {
        let (a, b) = self.cell(j);
        let (fa, fb) = (density.cdf(a), density.cdf(b));
        let u = fa + rng.random::<f64>() * (fb - fa);
        density.inverse_cdf(u).clamp(a, b)
    }
}

/// Discretized law on the cell midpoints of a uniform grid.
pub fn discretize(density: &Density, range: f64, levels: usize) -> Result<Pmf<f64>> {
    density.validate()?;
    let grid = Grid::new(range, levels)?;
    Pmf::new(grid.alphabet(), grid.masses(density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn discretize_examples() {
        let u = Density::Uniform { low: -1.0, high: 1.0 };
        let p = discretize(&u, 1.0, 2).unwrap();
        assert_eq!(p.alphabet().points(), &[-0.5, 0.5]);
        assert_eq!(p.mass(), &[0.5, 0.5]);
        let one = discretize(&Density::Gaussian { mean: 0.0, sd: 1.0 }, 3.0, 1).unwrap();
        assert_eq!(one.alphabet().points(), &[0.0]);
        assert_eq!(one.mass(), &[1.0]);
    }

    #[test]
    fn gaussian_second_moment() {
        let g = Density::Gaussian { mean: 0.0, sd: 1.0 };
        let p = discretize(&g, 4.0, 16).unwrap();
        let m2 = p.expect(|x| x * x);
        // midpoint rounding adds about w^2 / 12 to the variance
        let w = 0.5;
        assert!((m2 - (1.0 + w * w / 12.0)).abs() < 1e-3, "{m2}");
        assert!((m2 - 1.0).abs() < 0.025);
    }

    #[test]
    fn partial_moments_match_quadrature() {
        let dens = [
            Density::Gaussian { mean: 0.3, sd: 1.7 },
            Density::Uniform { low: -1.0, high: 2.0 },
        ];
        for d in dens {
            let grid = Grid::new(2.0, 5).unwrap();
            for j in 0..5 {
                let (a, b) = grid.cell(j);
                let (a, b) = (a.max(-20.0), b.min(20.0));
                let c = grid.label(j);
                let steps = 400_000;
                let h = (b - a) / steps as f64;
                let quad: f64 = (0..steps)
                    .map(|i| {
                        let x = a + (i as f64 + 0.5) * h;
                        let dens = (d.cdf(x + h / 2.0) - d.cdf(x - h / 2.0)) / h;
                        (x - c).powi(2) * dens * h
                    })
                    .sum();
                assert!((quad - d.partial_second_moment(a, b, c)).abs() < 1e-6, "{d:?} cell {j}");
            }
        }
    }

    #[test]
    fn quantile_coupling_cost_matches_monte_carlo() {
        let g = Density::Gaussian { mean: 0.0, sd: 1.0 };
        let grid = Grid::new(2.0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 200_000;
        let mc: f64 = (0..draws)
            .map(|_| {
                let x = g.sample(&mut rng);
                (x - grid.label(grid.index(x))).powi(2)
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mc - grid.discretization_cost(&g)).abs() < 3e-3);
    }

    #[test]
    fn cell_index_and_conditional_draws() {
        let grid = Grid::new(1.0, 4).unwrap();
        assert_eq!(grid.index(-5.0), 0);
        assert_eq!(grid.index(-0.5), 0);
        assert_eq!(grid.index(-0.49), 1);
        assert_eq!(grid.index(0.0), 1);
        assert_eq!(grid.index(9.0), 3);
        let g = Density::Gaussian { mean: 0.0, sd: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for j in 0..4 {
            for _ in 0..100 {
                let x = grid.sample_in_cell(&g, j, &mut rng);
                assert_eq!(grid.index(x), j);
            }
        }
    }
}
