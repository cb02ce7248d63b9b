use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Per-edge measurement-noise intensities with a keyed, counter-based
/// white-noise source.
///
/// A sample is a pure function of `(seed, stream, edge, k)`: every call
/// builds a fresh ChaCha generator keyed by that tuple, so draws do not
/// depend on evaluation order and distinct edges get independent streams.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    dim: usize,
    default_intensity: DVector<f64>,
    /// Zero-based `(from, to)` overrides.
    edge_intensity: BTreeMap<(usize, usize), DVector<f64>>,
    seed: u64,
    stream: u64,
}

impl NoiseModel {
    pub fn uniform(dim: usize, rho: f64, seed: u64) -> Result<Self> {
        Self::new(DVector::from_element(dim, rho), BTreeMap::new(), seed)
    }

    pub fn new(
        default_intensity: DVector<f64>,
        edge_intensity: BTreeMap<(usize, usize), DVector<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let dim = default_intensity.len();
        let check = |v: &DVector<f64>, what: &str| -> Result<()> {
            if v.len() != dim {
                return Err(Error::Parameter(format!(
                    "{what}: intensity has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|r| !r.is_finite() || *r < 0.0) {
                return Err(Error::Parameter(format!(
                    "{what}: intensities must be finite and nonnegative"
                )));
            }
            Ok(())
        };
        check(&default_intensity, "default")?;
        for ((j, i), v) in &edge_intensity {
            check(v, &format!("edge {} -> {}", j + 1, i + 1))?;
        }
        Ok(Self {
            dim,
            default_intensity,
            edge_intensity,
            seed,
            stream: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn default_intensity(&self) -> &DVector<f64> {
        &self.default_intensity
    }

    pub fn edge_overrides(&self) -> &BTreeMap<(usize, usize), DVector<f64>> {
        &self.edge_intensity
    }

    /// Copy keyed to an independent stream (one per Monte-Carlo run).
    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }

    pub fn intensity(&self, from: usize, to: usize) -> &DVector<f64> {
        self.edge_intensity
            .get(&(from, to))
            .unwrap_or(&self.default_intensity)
    }

    pub fn is_silent(&self) -> bool {
        self.default_intensity.iter().all(|&r| r == 0.0)
            && self.edge_intensity.values().all(|v| v.iter().all(|&r| r == 0.0))
    }

    /// Standard white-noise vector `η_ji[k]` (unscaled).
    pub fn white(&self, from: usize, to: usize, k: u64) -> DVector<f64> {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream.to_le_bytes());
        key[16..24].copy_from_slice(&(((from as u64) << 32) | to as u64).to_le_bytes());
        key[24..32].copy_from_slice(&k.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        DVector::from_fn(self.dim, |_, _| rng.sample(StandardNormal))
    }

    /// Measurement noise `ρ_ji η_ji[k]` on edge `from → to` at step `k`.
    pub fn sample(&self, from: usize, to: usize, k: u64) -> DVector<f64> {
        let rho = self.intensity(from, to);
        if rho.iter().all(|&r| r == 0.0) {
            return DVector::zeros(self.dim);
        }
        self.white(from, to, k).component_mul(rho)
    }
}

/// Exact `E(ν[k] ν[k+lag]ᵀ)` for `ν = (η, Δη, …, Δⁿη)` of scalar standard white noise.
pub fn difference_covariance(n: usize, lag: usize) -> DMatrix<f64> {
    let binom = |a: usize, b: usize| -> f64 {
        (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
    };
    // Δ^a η[k] = Σ_s (−1)^s C(a,s) η[k+a−s]
    DMatrix::from_fn(n + 1, n + 1, |a, b| {
        let mut acc = 0.0;
        for s in 0..=a {
            for t in 0..=b {
                if a as i64 - s as i64 == (lag + b) as i64 - t as i64 {
                    let sign = if (s + t) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * binom(a, s) * binom(b, t);
                }
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_silent() {
        let m = NoiseModel::uniform(3, 0.0, 9).unwrap();
        assert!(m.is_silent());
        for k in 0..10 {
            assert_eq!(m.sample(0, 1, k), DVector::zeros(3));
        }
    }

    #[test]
    fn samples_are_deterministic_and_keyed() {
        let m = NoiseModel::uniform(2, 1.0, 42).unwrap();
        assert_eq!(m.sample(0, 3, 7), m.sample(0, 3, 7));
        assert_ne!(m.sample(0, 3, 7), m.sample(1, 3, 7));
        assert_ne!(m.sample(0, 3, 7), m.sample(0, 3, 8));
        assert_ne!(m.sample(0, 3, 7), m.with_stream(1).sample(0, 3, 7));
    }

    #[test]
    fn intensities_scale_entrywise() {
        let mut over = BTreeMap::new();
        over.insert((0usize, 1usize), DVector::from_vec(vec![2.0, 0.0]));
        let m = NoiseModel::new(DVector::from_vec(vec![1.0, 1.0]), over, 5).unwrap();
        let w = m.white(0, 1, 3);
        let s = m.sample(0, 1, 3);
        assert_eq!(s[0], 2.0 * w[0]);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn rejects_negative_intensity() {
        assert!(NoiseModel::uniform(2, -0.1, 0).is_err());
    }

    #[test]
    fn covariance_vanishes_beyond_order() {
        for n in 0..5 {
            for lag in n + 1..n + 4 {
                assert_eq!(difference_covariance(n, lag).norm(), 0.0);
            }
        }
        // Var(Δη) = 2, Cov(η[k], Δη[k]) = −1
        let c = difference_covariance(1, 0);
        assert_eq!(c[(1, 1)], 2.0);
        assert_eq!(c[(0, 1)], -1.0);
    }
}
