//! Transition-matrix estimators.
//!
//! * The anchor-point (T) estimator reads row `i` of the matrix off the
//!   estimated noisy posterior at the row that maximises class `i`.
//! * The dual-T estimator treats the model's posterior as an intermediate
//!   class `Y'`. It estimates `T♣ = P(Y'|Y)` with the anchor-point rule,
//!   counts `T♠ = P(Ȳ|Y')` from argmax labels against noisy labels, and
//!   composes `T̂_ij = Σ_l T̂♣_il T̂♠_lj`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{abs_difference, PosteriorVector, TransitionMatrix};
use crate::model::PosteriorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    T,
    DualT,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::T => "t",
            EstimatorKind::DualT => "dualt",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(EstimatorKind::T),
            "dualt" => Ok(EstimatorKind::DualT),
            other => Err(Error::InvalidConfig(format!("unknown estimator `{other}`"))),
        }
    }
}

/// One anchor row per class and the posterior there.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub indices: Vec<usize>,
    pub posteriors: Vec<PosteriorVector>,
}

impl AnchorSet {
    /// For each class `i`, the row maximising the `i`-th posterior entry;
    /// the lowest row index wins ties.
    pub fn from_posteriors(posteriors: &[PosteriorVector]) -> Result<Self> {
        let first = posteriors.first().ok_or(Error::EmptyDataset)?;
        let c = first.len();
        let mut indices = vec![0usize; c];
        for (row, p) in posteriors.iter().enumerate().skip(1) {
            if p.len() != c {
                return Err(Error::DimensionMismatch { expected: c, found: p.len() });
            }
            for (class, best) in indices.iter_mut().enumerate() {
                if p[class] > posteriors[*best][class] {
                    *best = row;
                }
            }
        }
        let posteriors = indices.iter().map(|&i| posteriors[i].clone()).collect();
        Ok(AnchorSet { indices, posteriors })
    }

    /// Stacks the anchor posteriors as matrix rows.
    pub fn matrix(&self) -> Result<TransitionMatrix> {
        let c = self.posteriors.len();
        let flat = self.posteriors.iter().flat_map(|p| p.probs().iter().copied()).collect();
        TransitionMatrix::from_flat_renormalized(c, flat)
    }
}

/// Hard intermediate labels `Y' = argmax P̂(Ȳ|x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntermediateLabeling {
    pub labels: Vec<usize>,
}

impl IntermediateLabeling {
    pub fn from_posteriors(posteriors: &[PosteriorVector]) -> Result<Self> {
        if posteriors.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(IntermediateLabeling { labels: posteriors.iter().map(PosteriorVector::argmax).collect() })
    }
}

/// Both factors of a dual-T estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFactors {
    /// `T♣`, clean → intermediate.
    pub club: TransitionMatrix,
    /// `T♠`, intermediate → noisy, by counting.
    pub spade: TransitionMatrix,
    /// Intermediate classes no row was assigned to; their `T♠` row is one-hot.
    pub empty_spade_rows: Vec<usize>,
}

/// An estimated matrix, optionally scored against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub estimator: EstimatorKind,
    pub estimated: TransitionMatrix,
    pub ground_truth: Option<TransitionMatrix>,
    pub l1_error: Option<f64>,
    pub per_entry_abs_error: Option<Vec<Vec<f64>>>,
    pub anchor_indices: Vec<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<DualFactors>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimationReport {
    fn new(estimator: EstimatorKind, estimated: TransitionMatrix, anchors: &AnchorSet) -> Self {
        EstimationReport {
            estimator,
            estimated,
            ground_truth: None,
            l1_error: None,
            per_entry_abs_error: None,
            anchor_indices: anchors.indices.clone(),
            seed: 0,
            factors: None,
            warnings: Vec::new(),
        }
    }

    /// Attaches the true matrix with its per-entry and total ℓ1 error.
    pub fn with_ground_truth(mut self, truth: &TransitionMatrix) -> Result<Self> {
        let diff = abs_difference(&self.estimated, truth)?;
        self.l1_error = Some(diff.iter().sum());
        self.per_entry_abs_error =
            Some(diff.chunks(truth.num_classes()).map(<[f64]>::to_vec).collect());
        self.ground_truth = Some(truth.clone());
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn table<M: PosteriorModel>(model: &M, data: &Dataset) -> Result<Vec<PosteriorVector>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    model.posteriors(data)
}

pub fn find_anchors<M: PosteriorModel>(model: &M, data: &Dataset) -> Result<AnchorSet> {
    AnchorSet::from_posteriors(&table(model, data)?)
}

pub fn intermediate_labels<M: PosteriorModel>(
    model: &M,
    data: &Dataset,
) -> Result<IntermediateLabeling> {
    IntermediateLabeling::from_posteriors(&table(model, data)?)
}

/// Anchor-point estimator over the rows of `data`.
pub fn t_estimate<M: PosteriorModel>(model: &M, data: &Dataset) -> Result<EstimationReport> {
    t_estimate_from_posteriors(&table(model, data)?)
}

pub fn t_estimate_from_posteriors(posteriors: &[PosteriorVector]) -> Result<EstimationReport> {
    let anchors = AnchorSet::from_posteriors(posteriors)?;
    Ok(EstimationReport::new(EstimatorKind::T, anchors.matrix()?, &anchors))
}

/// `T̂♠` with the classes that received no rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SpadeCount {
    pub matrix: TransitionMatrix,
    pub empty_rows: Vec<usize>,
}

/// Counting estimate `T̂♠_lj = #{Y'=l, Ȳ=j} / #{Y'=l}`. A class with no
/// rows gets the one-hot row `e_l`.
pub fn count_spade(
    inter: &IntermediateLabeling,
    noisy_labels: &[usize],
    num_classes: usize,
) -> Result<SpadeCount> {
    let c = num_classes;
    if inter.labels.len() != noisy_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: inter.labels.len(),
            found: noisy_labels.len(),
        });
    }
    let mut counts = vec![0usize; c * c];
    for (&l, &j) in inter.labels.iter().zip(noisy_labels) {
        if l >= c || j >= c {
            return Err(Error::DimensionMismatch { expected: c, found: l.max(j) + 1 });
        }
        counts[l * c + j] += 1;
    }
    let mut entries = vec![0.0; c * c];
    let mut empty_rows = Vec::new();
    for l in 0..c {
        let row = &counts[l * c..(l + 1) * c];
        let total: usize = row.iter().sum();
        if total == 0 {
            log::warn!("no row has intermediate label {l}; using a one-hot T♠ row");
            empty_rows.push(l);
            entries[l * c + l] = 1.0;
        } else {
            for (e, &k) in entries[l * c..(l + 1) * c].iter_mut().zip(row) {
                *e = k as f64 / total as f64;
            }
        }
    }
    Ok(SpadeCount { matrix: TransitionMatrix::from_flat(c, entries)?, empty_rows })
}

/// `T̂♣ · T̂♠`.
pub fn compose_dual(club: &TransitionMatrix, spade: &TransitionMatrix) -> Result<TransitionMatrix> {
    club.compose(spade)
}

/// Dual-T estimator over the rows of `data`, which must carry noisy labels.
pub fn dual_t_estimate<M: PosteriorModel>(model: &M, data: &Dataset) -> Result<EstimationReport> {
    let noisy = data.require_noisy()?;
    let posteriors = table(model, data)?;
    let inter = IntermediateLabeling::from_posteriors(&posteriors)?;
    dual_t_from_parts(&posteriors, &inter, noisy)
}

/// Dual-T with caller-supplied intermediate labels instead of the argmax
/// of `posteriors`.
pub fn dual_t_from_parts(
    posteriors: &[PosteriorVector],
    inter: &IntermediateLabeling,
    noisy_labels: &[usize],
) -> Result<EstimationReport> {
    let anchors = AnchorSet::from_posteriors(posteriors)?;
    let club = anchors.matrix()?;
    let spade = count_spade(inter, noisy_labels, club.num_classes())?;
    let estimated = compose_dual(&club, &spade.matrix)?;
    let mut report = EstimationReport::new(EstimatorKind::DualT, estimated, &anchors);
    report.warnings = spade
        .empty_rows
        .iter()
        .map(|l| format!("intermediate class {l} is empty; T♠ row set to one-hot"))
        .collect();
    report.factors = Some(DualFactors {
        club,
        spade: spade.matrix,
        empty_spade_rows: spade.empty_rows,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pv(rows: &[&[f64]]) -> Vec<PosteriorVector> {
        rows.iter().map(|r| PosteriorVector::new(r.to_vec()).unwrap()).collect()
    }

    #[test]
    fn anchors_by_argmax() {
        let a = AnchorSet::from_posteriors(&pv(&[&[0.9, 0.1], &[0.2, 0.8], &[0.6, 0.4]])).unwrap();
        assert_eq!(a.indices, vec![0, 1]);
        let same = AnchorSet::from_posteriors(&pv(&[&[0.3, 0.3, 0.4][..]; 4])).unwrap();
        assert_eq!(same.indices, vec![0, 0, 0]);
        assert!(matches!(AnchorSet::from_posteriors(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn t_estimator_degenerate_cases() {
        let r = t_estimate_from_posteriors(&pv(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert_eq!(r.estimated.rows(), vec![vec![0.5, 0.5]; 2]);
        let id = TransitionMatrix::identity(2).unwrap();
        let r = r.with_ground_truth(&id).unwrap();
        // 2C(1 - 1/C) for C = 2.
        assert_abs_diff_eq!(r.l1_error.unwrap(), 2.0, epsilon = 1e-12);

        let r = t_estimate_from_posteriors(&pv(&[&[1.0, 0.0], &[0.0, 1.0]]))
            .unwrap()
            .with_ground_truth(&id)
            .unwrap();
        assert_eq!(r.estimated, id);
        assert_eq!(r.l1_error, Some(0.0));
    }

    #[test]
    fn intermediate_labels_tie_low() {
        let l = IntermediateLabeling::from_posteriors(&pv(&[&[0.7, 0.3], &[0.4, 0.6]])).unwrap();
        assert_eq!(l.labels, vec![0, 1]);
        let l = IntermediateLabeling::from_posteriors(&pv(&[&[0.5, 0.5][..]; 3])).unwrap();
        assert_eq!(l.labels, vec![0, 0, 0]);
    }

    #[test]
    fn spade_counting_examples() {
        let inter = IntermediateLabeling { labels: vec![0, 0, 1, 1] };
        let s = count_spade(&inter, &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(s.matrix.rows(), vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert!(s.empty_rows.is_empty());

        let inter = IntermediateLabeling { labels: vec![2, 0, 1, 1, 0] };
        let s = count_spade(&inter, &inter.labels.clone(), 3).unwrap();
        assert_eq!(s.matrix, TransitionMatrix::identity(3).unwrap());

        let inter = IntermediateLabeling { labels: vec![0, 1, 1] };
        let s = count_spade(&inter, &[1, 0, 1], 3).unwrap();
        assert_eq!(s.matrix.row(2), &[0.0, 0.0, 1.0]);
        assert_eq!(s.empty_rows, vec![2]);

        assert!(count_spade(&inter, &[0, 1], 3).is_err());
    }

    #[test]
    fn identity_spade_reduces_to_t_estimator() {
        let posts = pv(&[&[0.9, 0.1], &[0.3, 0.7], &[0.6, 0.4], &[0.2, 0.8]]);
        let inter = IntermediateLabeling::from_posteriors(&posts).unwrap();
        let noisy = inter.labels.clone();
        let dual = dual_t_from_parts(&posts, &inter, &noisy).unwrap();
        let t = t_estimate_from_posteriors(&posts).unwrap();
        assert_eq!(dual.factors.as_ref().unwrap().spade, TransitionMatrix::identity(2).unwrap());
        assert_eq!(dual.estimated, t.estimated);
        assert_eq!(dual.anchor_indices, t.anchor_indices);
    }

    #[test]
    fn report_json_carries_factors() {
        let posts = pv(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let inter = IntermediateLabeling::from_posteriors(&posts).unwrap();
        let r = dual_t_from_parts(&posts, &inter, &[0, 0]).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["estimator"], "dualt");
        assert_eq!(json["factors"]["spade"]["rows"][1], serde_json::json!([1.0, 0.0]));
        let back: EstimationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }

    fn naive_spade(inter: &[usize], noisy: &[usize], c: usize) -> Vec<Vec<f64>> {
        (0..c)
            .map(|l| {
                let den = inter.iter().filter(|&&v| v == l).count();
                (0..c)
                    .map(|j| {
                        if den == 0 {
                            return if j == l { 1.0 } else { 0.0 };
                        }
                        let num = (0..inter.len()).filter(|&i| inter[i] == l && noisy[i] == j).count();
                        num as f64 / den as f64
                    })
                    .collect()
            })
            .collect()
    }

    fn random_posts(c: usize, n: usize) -> impl Strategy<Value = Vec<PosteriorVector>> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, c), n).prop_map(|rows| {
            rows.into_iter().map(|r| PosteriorVector::renormalized(r).unwrap()).collect()
        })
    }

    proptest! {
        #[test]
        fn spade_matches_brute_force(
            (c, pairs) in (2usize..=3).prop_flat_map(|c| (Just(c), prop::collection::vec((0..c, 0..c), 1..=12)))
        ) {
            let inter: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let noisy: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let s = count_spade(&IntermediateLabeling { labels: inter.clone() }, &noisy, c).unwrap();
            prop_assert_eq!(s.matrix.rows(), naive_spade(&inter, &noisy, c));
            prop_assert!(TransitionMatrix::from_rows(&s.matrix.rows()).is_ok());
        }

        #[test]
        fn composition_is_the_double_sum(
            (posts, noisy) in (2usize..=4).prop_flat_map(|c| (random_posts(c, 10), prop::collection::vec(0..c, 10)))
        ) {
            let inter = IntermediateLabeling::from_posteriors(&posts).unwrap();
            let r = dual_t_from_parts(&posts, &inter, &noisy).unwrap();
            let f = r.factors.as_ref().unwrap();
            let c = f.club.num_classes();
            for i in 0..c {
                for j in 0..c {
                    let mut sum = 0.0;
                    for l in 0..c {
                        sum += f.club.get(i, l) * f.spade.get(l, j);
                    }
                    prop_assert!((r.estimated.get(i, j) - sum).abs() < 1e-12);
                }
            }
        }
    }
}
