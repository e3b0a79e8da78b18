//! Benchmark noise models and label corruption.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Uniform off-diagonal mass `eps / (C-1)`.
    Sym,
    /// Mass `eps` moved from class `i` to `(i+1) mod C`.
    Pair,
}

impl NoiseKind {
    pub fn matrix(self, num_classes: usize, eps: f64) -> Result<TransitionMatrix> {
        match self {
            NoiseKind::Sym => symmetric_matrix(num_classes, eps),
            NoiseKind::Pair => pair_matrix(num_classes, eps),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Sym => "sym",
            NoiseKind::Pair => "pair",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" => Ok(NoiseKind::Sym),
            "pair" => Ok(NoiseKind::Pair),
            other => Err(Error::InvalidConfig(format!("unknown noise kind `{other}`"))),
        }
    }
}

fn check(c: usize, eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::BadEps(eps));
    }
    if c < 2 {
        return Err(Error::BadShape(format!("need at least 2 classes, got {c}")));
    }
    Ok(())
}

pub fn symmetric_matrix(c: usize, eps: f64) -> Result<TransitionMatrix> {
    check(c, eps)?;
    let off = eps / (c - 1) as f64;
    let mut entries = vec![off; c * c];
    for i in 0..c {
        entries[i * c + i] = 1.0 - eps;
    }
    TransitionMatrix::from_flat(c, entries)
}

pub fn pair_matrix(c: usize, eps: f64) -> Result<TransitionMatrix> {
    check(c, eps)?;
    let mut entries = vec![0.0; c * c];
    for i in 0..c {
        entries[i * c + i] = 1.0 - eps;
        entries[i * c + (i + 1) % c] += eps;
    }
    TransitionMatrix::from_flat(c, entries)
}

/// Samples a noisy label for every row from row `clean[i]` of `t`.
/// Features and clean labels are carried over unchanged.
pub fn corrupt(data: &Dataset, t: &TransitionMatrix, seed: u64) -> Result<Dataset> {
    if data.num_classes() != t.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: t.num_classes(),
            found: data.num_classes(),
        });
    }
    let clean = data.require_clean()?;
    let mut rng = seed::rng(seed);
    let noisy = clean
        .iter()
        .map(|&y| sample_categorical(t.row(y), rng.random::<f64>()))
        .collect();
    data.with_noisy_labels(noisy)
}

/// Inverse-CDF draw; `u` in `[0, 1)`.
fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // u landed in the rounding gap above the last cumulative sum.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, GaussianSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_examples() {
        assert_eq!(symmetric_matrix(2, 0.0).unwrap(), TransitionMatrix::identity(2).unwrap());
        assert_eq!(symmetric_matrix(2, 0.2).unwrap().rows(), vec![vec![0.8, 0.2], vec![0.2, 0.8]]);
        let m = symmetric_matrix(10, 0.5).unwrap();
        for i in 0..10 {
            assert_abs_diff_eq!(m.get(i, i), 0.5, epsilon = 1e-15);
            for j in (0..10).filter(|&j| j != i) {
                assert_abs_diff_eq!(m.get(i, j), 0.5 / 9.0, epsilon = 1e-15);
            }
            assert_abs_diff_eq!(m.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        }
        assert!(matches!(symmetric_matrix(2, 1.0), Err(Error::BadEps(_))));
        assert!(matches!(symmetric_matrix(2, -0.1), Err(Error::BadEps(_))));
    }

    #[test]
    fn pair_examples() {
        assert_eq!(pair_matrix(2, 0.45).unwrap().rows(), vec![vec![0.55, 0.45], vec![0.45, 0.55]]);
        let m = pair_matrix(3, 0.45).unwrap();
        let expected = [[0.55, 0.45, 0.0], [0.0, 0.55, 0.45], [0.45, 0.0, 0.55]];
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_abs_diff_eq!(m.get(i, j), *v, epsilon = 1e-15);
            }
        }
        for c in 2..6 {
            assert_eq!(pair_matrix(c, 0.0).unwrap(), TransitionMatrix::identity(c).unwrap());
        }
    }

    #[test]
    fn identity_noise_keeps_labels() {
        let d = generate(&GaussianSpec::default(), 500, 2).unwrap();
        let noisy = corrupt(&d, &TransitionMatrix::identity(2).unwrap(), 9).unwrap();
        assert_eq!(noisy.noisy_labels().unwrap(), d.clean_labels().unwrap());
        assert_eq!(noisy.features(), d.features());
    }

    #[test]
    fn corruption_frequencies_and_determinism() {
        let d = generate(&GaussianSpec::default(), 100_000, 1).unwrap();
        let t = symmetric_matrix(2, 0.2).unwrap();
        let a = corrupt(&d, &t, 3).unwrap();
        let b = corrupt(&d, &t, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.clean_labels(), d.clean_labels());
        let clean = a.clean_labels().unwrap();
        let noisy = a.noisy_labels().unwrap();
        for class in 0..2 {
            let (mut total, mut flipped) = (0usize, 0usize);
            for (&c, &n) in clean.iter().zip(noisy) {
                if c == class {
                    total += 1;
                    flipped += usize::from(n != c);
                }
            }
            assert!((flipped as f64 / total as f64 - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn empirical_confusion_converges_to_pair_matrix() {
        let d = generate(&GaussianSpec::default(), 100_000, 4).unwrap();
        let t = pair_matrix(2, 0.45).unwrap();
        let noisy = corrupt(&d, &t, 11).unwrap();
        let mut counts = [[0usize; 2]; 2];
        for (&c, &n) in noisy.clean_labels().unwrap().iter().zip(noisy.noisy_labels().unwrap()) {
            counts[c][n] += 1;
        }
        for (i, row) in counts.iter().enumerate() {
            let total = (row[0] + row[1]) as f64;
            for (j, &k) in row.iter().enumerate() {
                assert!((k as f64 / total - t.get(i, j)).abs() < 0.01);
            }
        }
    }

    #[test]
    fn corrupt_errors() {
        let d = Dataset::new(vec![0.0, 1.0], 1, None, None, 2).unwrap();
        let t = symmetric_matrix(2, 0.2).unwrap();
        assert!(matches!(corrupt(&d, &t, 0), Err(Error::MissingCleanLabels)));
        let t3 = symmetric_matrix(3, 0.2).unwrap();
        assert!(matches!(corrupt(&d, &t3, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn categorical_never_picks_zero_mass() {
        assert_eq!(sample_categorical(&[0.55, 0.45, 0.0], 0.999_999_999_999), 1);
        assert_eq!(sample_categorical(&[0.0, 1.0], 0.0), 1);
    }

    proptest! {
        #[test]
        fn constructors_are_valid(c in 2usize..12, eps in 0.0f64..0.999) {
            for m in [symmetric_matrix(c, eps).unwrap(), pair_matrix(c, eps).unwrap()] {
                for i in 0..c {
                    let s: f64 = m.row(i).iter().sum();
                    prop_assert!((s - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
