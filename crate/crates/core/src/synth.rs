//! Synthetic binary task: two isotropic Gaussians with closed-form posteriors.
//!
//! Class 0 is centred at `mean0` in every coordinate, class 1 at `mean1`,
//! both with variance `variance`. Sampling draws the label first
//! (`P(Y=1) = prior1`) and then `dim` standard normals from a ChaCha8
//! stream using the ziggurat method (`rand_distr::StandardNormal`), so
//! `(seed, n, spec)` fixes the output on every platform.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{apply_transition, PosteriorVector, TransitionMatrix};
use crate::model::PosteriorModel;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianSpec {
    pub dim: usize,
    pub mean0: f64,
    pub mean1: f64,
    pub variance: f64,
    pub prior1: f64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        GaussianSpec { dim: 10, mean0: 0.0, mean1: 2.0, variance: 1.0, prior1: 0.5 }
    }
}

impl GaussianSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidConfig(format!("variance {} must be > 0", self.variance)));
        }
        if !(self.prior1 > 0.0 && self.prior1 < 1.0) {
            return Err(Error::InvalidConfig(format!("prior1 {} must be in (0, 1)", self.prior1)));
        }
        if !(self.mean0.is_finite() && self.mean1.is_finite()) {
            return Err(Error::InvalidConfig("means must be finite".into()));
        }
        Ok(())
    }

    /// Log-odds `log P(Y=1|x) / P(Y=0|x)`.
    pub fn log_odds(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let sum: f64 = x.iter().sum();
        let slope = (self.mean1 - self.mean0) / self.variance;
        let offset = self.dim as f64 * (self.mean1 * self.mean1 - self.mean0 * self.mean0)
            / (2.0 * self.variance);
        Ok(slope * sum - offset + (self.prior1 / (1.0 - self.prior1)).ln())
    }
}

/// Draws `n` labelled points. Noisy labels are left empty.
pub fn generate(spec: &GaussianSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = seed::rng(seed);
    let sd = spec.variance.sqrt();
    let mut features = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = usize::from(rng.random::<f64>() < spec.prior1);
        let mean = if label == 1 { spec.mean1 } else { spec.mean0 };
        for _ in 0..spec.dim {
            let z: f64 = rng.sample(StandardNormal);
            features.push(mean + sd * z);
        }
        labels.push(label);
    }
    Dataset::new(features, spec.dim, Some(labels), None, 2)
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Bayes posterior `[P(Y=0|x), P(Y=1|x)]`.
pub fn oracle_clean_posterior(x: &[f64], spec: &GaussianSpec) -> Result<PosteriorVector> {
    let p1 = sigmoid(spec.log_odds(x)?);
    PosteriorVector::new(vec![1.0 - p1, p1])
}

/// Noisy posterior `Tᵀ P(Y|x)` under class-dependent noise `t`.
pub fn oracle_noisy_posterior(
    x: &[f64],
    spec: &GaussianSpec,
    t: &TransitionMatrix,
) -> Result<PosteriorVector> {
    apply_transition(&oracle_clean_posterior(x, spec)?, t)
}

/// A [`PosteriorModel`] that returns the exact noisy posterior.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    pub spec: GaussianSpec,
    pub transition: TransitionMatrix,
}

impl NoisyOracle {
    pub fn new(spec: GaussianSpec, transition: TransitionMatrix) -> Result<Self> {
        spec.validate()?;
        if transition.num_classes() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: transition.num_classes() });
        }
        Ok(NoisyOracle { spec, transition })
    }
}

impl PosteriorModel for NoisyOracle {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        self.spec.dim
    }

    fn posterior(&self, x: &[f64]) -> Result<PosteriorVector> {
        oracle_noisy_posterior(x, &self.spec, &self.transition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = GaussianSpec::default();
        assert_eq!(generate(&spec, 4, 7).unwrap(), generate(&spec, 4, 7).unwrap());
        assert_ne!(generate(&spec, 4, 7).unwrap(), generate(&spec, 4, 8).unwrap());
    }

    #[test]
    fn large_sample_moments() {
        let spec = GaussianSpec::default();
        let d = generate(&spec, 100_000, 1).unwrap();
        let labels = d.require_clean().unwrap();
        let ones = labels.iter().filter(|&&l| l == 1).count();
        assert!((ones as f64 / 1e5 - 0.5).abs() < 0.01);
        let mut sums = vec![0.0; spec.dim];
        for (i, row) in d.rows().enumerate() {
            if labels[i] == 1 {
                for (s, v) in sums.iter_mut().zip(row) {
                    *s += v;
                }
            }
        }
        for s in sums {
            assert!((s / ones as f64 - 2.0).abs() < 0.05);
        }
    }

    #[test]
    fn closed_form_posteriors() {
        let spec = GaussianSpec::default();
        let p = oracle_clean_posterior(&[1.0; 10], &spec).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
        let p = oracle_clean_posterior(&[2.0; 10], &spec).unwrap();
        let expected = 1.0 / (1.0 + (-20.0f64).exp());
        assert_abs_diff_eq!(p[1], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 - p[1], 2.0611536181902037e-9, epsilon = 1e-15);
        let p0 = oracle_clean_posterior(&[0.0; 10], &spec).unwrap();
        assert_abs_diff_eq!(p0[1], sigmoid(-20.0), epsilon = 1e-24);
        assert!(oracle_clean_posterior(&[0.0; 3], &spec).is_err());
    }

    #[test]
    fn noisy_posteriors() {
        let spec = GaussianSpec::default();
        let sym = TransitionMatrix::from_rows(&[vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let p = oracle_noisy_posterior(&[1.0; 10], &spec, &sym).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        let p = oracle_noisy_posterior(&[2.0; 10], &spec, &sym).unwrap();
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-8);
        let id = TransitionMatrix::identity(2).unwrap();
        let x = [0.3, 1.2, 0.9, 1.1, 1.0, 1.4, 0.7, 0.8, 1.3, 1.05];
        assert_eq!(
            oracle_noisy_posterior(&x, &spec, &id).unwrap(),
            oracle_clean_posterior(&x, &spec).unwrap()
        );
        let i3 = TransitionMatrix::identity(3).unwrap();
        assert!(oracle_noisy_posterior(&x, &spec, &i3).is_err());
    }

    #[test]
    fn bayes_accuracy_matches_analytic_risk() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let spec = GaussianSpec::default();
        let d = generate(&spec, 100_000, 5).unwrap();
        let labels = d.require_clean().unwrap();
        let correct = d
            .rows()
            .zip(labels)
            .filter(|(x, &y)| oracle_clean_posterior(x, &spec).unwrap().argmax() == y)
            .count();
        let distance = (spec.mean1 - spec.mean0).abs() * (spec.dim as f64).sqrt();
        let risk = Normal::new(0.0, 1.0).unwrap().cdf(-distance / (2.0 * spec.variance.sqrt()));
        assert!((correct as f64 / 1e5 - (1.0 - risk)).abs() < 0.01);
    }

    #[test]
    fn spec_validation() {
        let bad = GaussianSpec { variance: 0.0, ..Default::default() };
        assert!(generate(&bad, 3, 0).is_err());
        let bad = GaussianSpec { prior1: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn posterior_monotone_in_feature_sum(x in prop::collection::vec(-3f64..5.0, 10), bump in 0.01f64..2.0) {
            let spec = GaussianSpec::default();
            let mut y = x.clone();
            y[0] += bump;
            let a = oracle_clean_posterior(&x, &spec).unwrap();
            let b = oracle_clean_posterior(&y, &spec).unwrap();
            prop_assert_eq!(a[0] + a[1], 1.0);
            // Strict once the posterior is not saturated at 1.0 in f64.
            if a[1] < 1.0 - 1e-12 {
                prop_assert!(b[1] > a[1]);
            } else {
                prop_assert!(b[1] >= a[1]);
            }
        }
    }
}
