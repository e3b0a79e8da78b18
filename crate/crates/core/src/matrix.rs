//! Row-stochastic transition matrices and probability-simplex vectors.
//!
//! Convention: rows index the clean class, columns the noisy class, so
//! `T[i][j] = P(noisy = j | clean = i)`. A clean posterior `p` maps to the
//! noisy posterior through the transpose action `p̄_j = Σ_i T[i][j] p_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating row sums and simplex membership.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Absolute pivot magnitude below which a matrix is treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-10;

/// A validated `C × C` row-stochastic matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct TransitionMatrix {
    num_classes: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    num_classes: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for TransitionMatrix {
    type Error = Error;

    fn try_from(raw: MatrixJson) -> Result<Self> {
        if raw.rows.len() != raw.num_classes {
            return Err(Error::BadShape(format!(
                "num_classes is {} but {} rows were given",
                raw.num_classes,
                raw.rows.len()
            )));
        }
        TransitionMatrix::from_rows(&raw.rows)
    }
}

impl From<TransitionMatrix> for MatrixJson {
    fn from(m: TransitionMatrix) -> Self {
        MatrixJson {
            num_classes: m.num_classes,
            rows: m.rows(),
        }
    }
}

impl TransitionMatrix {
    /// Validates a raw square matrix given as rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c = rows.len();
        if c < 2 {
            return Err(Error::BadShape(format!("need at least 2 classes, got {c}")));
        }
        let mut entries = Vec::with_capacity(c * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::BadShape(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::from_flat(c, entries)
    }

    /// Validates a row-major flat buffer of `c * c` entries.
    pub fn from_flat(c: usize, entries: Vec<f64>) -> Result<Self> {
        if c < 2 {
            return Err(Error::BadShape(format!("need at least 2 classes, got {c}")));
        }
        if entries.len() != c * c {
            return Err(Error::BadShape(format!(
                "expected {} entries, got {}",
                c * c,
                entries.len()
            )));
        }
        for i in 0..c {
            let row = &entries[i * c..(i + 1) * c];
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::NegativeEntry { row: i, col: j, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::NonStochasticRow { row: i, sum });
            }
        }
        Ok(TransitionMatrix { num_classes: c, entries })
    }

    /// Builds a matrix from rows that are stochastic up to float drift:
    /// each row is rescaled to sum to one before validation.
    pub(crate) fn from_flat_renormalized(c: usize, mut entries: Vec<f64>) -> Result<Self> {
        for row in entries.chunks_mut(c) {
            renormalize(row);
        }
        Self::from_flat(c, entries)
    }

    pub fn identity(c: usize) -> Result<Self> {
        let mut entries = vec![0.0; c * c];
        for i in 0..c {
            entries[i * c + i] = 1.0;
        }
        Self::from_flat(c, entries)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.num_classes + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.num_classes;
        &self.entries[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.num_classes)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.entries
    }

    /// Matrix product `self · other`, both row-stochastic.
    pub fn compose(&self, other: &TransitionMatrix) -> Result<TransitionMatrix> {
        check_same(self.num_classes, other.num_classes)?;
        let c = self.num_classes;
        let mut out = vec![0.0; c * c];
        for i in 0..c {
            for l in 0..c {
                let a = self.get(i, l);
                for j in 0..c {
                    out[i * c + j] += a * other.get(l, j);
                }
            }
        }
        Self::from_flat_renormalized(c, out)
    }

    /// Inverse of the transpose, `(Tᵀ)⁻¹`, row-major.
    ///
    /// Used to map a noisy posterior back to the clean simplex.
    pub fn transpose_inverse(&self) -> Result<Vec<f64>> {
        let c = self.num_classes;
        let mut t = vec![0.0; c * c];
        for i in 0..c {
            for j in 0..c {
                t[j * c + i] = self.get(i, j);
            }
        }
        invert(&t, c)
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PosteriorVector(Vec<f64>);

impl TryFrom<Vec<f64>> for PosteriorVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PosteriorVector::new(v)
    }
}

impl From<PosteriorVector> for Vec<f64> {
    fn from(p: PosteriorVector) -> Self {
        p.0
    }
}

impl PosteriorVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::BadShape("empty posterior".into()));
        }
        for (j, &v) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::NegativeEntry { row: 0, col: j, value: v });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NonStochasticRow { row: 0, sum });
        }
        Ok(PosteriorVector(probs))
    }

    /// Rescales to unit sum, then validates. Absorbs float drift from
    /// internally computed posteriors.
    pub fn renormalized(mut probs: Vec<f64>) -> Result<Self> {
        renormalize(&mut probs);
        Self::new(probs)
    }

    pub fn uniform(c: usize) -> Self {
        PosteriorVector(vec![1.0 / c as f64; c])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl std::ops::Index<usize> for PosteriorVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Maps a clean posterior through `T`: `p̄_j = Σ_i T[i][j] p_i`.
pub fn apply_transition(p: &PosteriorVector, t: &TransitionMatrix) -> Result<PosteriorVector> {
    check_same(t.num_classes, p.len())?;
    PosteriorVector::renormalized(transpose_action(t, p.probs()))
}

/// Unchecked transpose action on a raw vector.
pub(crate) fn transpose_action(t: &TransitionMatrix, p: &[f64]) -> Vec<f64> {
    let c = t.num_classes;
    let mut out = vec![0.0; c];
    for (i, &pi) in p.iter().enumerate() {
        for (o, &tij) in out.iter_mut().zip(t.row(i)) {
            *o += tij * pi;
        }
    }
    out
}

/// Entrywise ℓ1 distance `Σ_ij |A_ij − B_ij|`.
pub fn l1_matrix_distance(a: &TransitionMatrix, b: &TransitionMatrix) -> Result<f64> {
    Ok(abs_difference(a, b)?.iter().sum())
}

/// Entrywise `|A_ij − B_ij|`, row-major.
pub fn abs_difference(a: &TransitionMatrix, b: &TransitionMatrix) -> Result<Vec<f64>> {
    check_same(a.num_classes, b.num_classes)?;
    Ok(a.entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (x - y).abs())
        .collect())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn renormalize(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        for x in v.iter_mut() {
            *x = (*x / sum).clamp(0.0, 1.0);
        }
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Gauss-Jordan inversion with partial pivoting of a row-major `c × c` matrix.
pub(crate) fn invert(m: &[f64], c: usize) -> Result<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; c * c];
    for i in 0..c {
        inv[i * c + i] = 1.0;
    }
    for col in 0..c {
        let pivot_row = (col..c)
            .max_by(|&r, &s| a[r * c + col].abs().total_cmp(&a[s * c + col].abs()))
            .unwrap_or(col);
        let pivot = a[pivot_row * c + col];
        if pivot.abs() < SINGULAR_PIVOT {
            return Err(Error::SingularMatrix { pivot: pivot.abs() });
        }
        if pivot_row != col {
            for k in 0..c {
                a.swap(pivot_row * c + k, col * c + k);
                inv.swap(pivot_row * c + k, col * c + k);
            }
        }
        for k in 0..c {
            a[col * c + k] /= pivot;
            inv[col * c + k] /= pivot;
        }
        for r in 0..c {
            if r == col {
                continue;
            }
            let factor = a[r * c + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..c {
                a[r * c + k] -= factor * a[col * c + k];
                inv[r * c + k] -= factor * inv[col * c + k];
            }
        }
    }
    Ok(inv)
}
