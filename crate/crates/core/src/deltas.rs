//! Error decomposition on the synthetic task, measured against the
//! analytic posteriors.
//!
//! * Δ1: noisy-posterior error, `|P(Ȳ=j|x) − P̂(Ȳ=j|x)|`.
//! * Δ2: counting error, `|P(Ȳ=j|Y'=l) − P̂(Ȳ=j|Y'=l)|`, with the truth
//!   taken from a large independent Monte Carlo draw.
//! * Δ3: label-fit error, `|P(Ȳ=j|Y'=l,Y=i,x) − P(Ȳ=j|Y'=l,x)|`. Under
//!   class-dependent noise with `Y'` a function of `x` the first term is
//!   `T_ij` and the second the oracle noisy posterior.
//!
//! Each is reported as a mean over rows and classes. The dual-T error is
//! bounded by `C²(Δ2 + Δ3)` and the anchor-point error equals `C²Δ1` when
//! Δ1 is constant.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{
    dual_t_estimate, intermediate_labels, t_estimate, EstimationReport, IntermediateLabeling,
};
use crate::matrix::{l1_matrix_distance, TransitionMatrix};
use crate::model::PosteriorModel;
use crate::synth::{generate, oracle_noisy_posterior, GaussianSpec};

pub const DEFAULT_BOUND_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta1_mean: f64,
    pub delta2_mean: f64,
    pub delta3_mean: f64,
    pub eps_t: f64,
    pub eps_dt: f64,
    /// `C²(Δ2 + Δ3)`.
    pub bound: f64,
    pub bound_slack: f64,
    pub bound_holds: bool,
    pub dual_t_better: bool,
    /// Fraction of rows with `Δ1(x) ≥ Δ2 + Δ3(x)`.
    pub assumption1_fraction: f64,
    pub sample_size: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

fn check_oracle(spec: &GaussianSpec, t: &TransitionMatrix, data: &Dataset) -> Result<()> {
    spec.validate().map_err(|_| Error::OracleUnavailable)?;
    if t.num_classes() != 2 || data.num_classes() != 2 || data.dim() != spec.dim {
        return Err(Error::OracleUnavailable);
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

fn mean_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Per-row Δ1(x), averaged over classes.
pub fn delta1_per_row<M: PosteriorModel>(
    model: &M,
    spec: &GaussianSpec,
    t: &TransitionMatrix,
    eval_set: &Dataset,
) -> Result<Vec<f64>> {
    check_oracle(spec, t, eval_set)?;
    eval_set
        .rows()
        .map(|x| {
            let truth = oracle_noisy_posterior(x, spec, t)?;
            let est = model.posterior(x)?;
            if est.len() != truth.len() {
                return Err(Error::DimensionMismatch { expected: truth.len(), found: est.len() });
            }
            Ok(mean_abs(truth.probs(), est.probs()))
        })
        .collect()
}

pub fn measure_delta1<M: PosteriorModel>(
    model: &M,
    spec: &GaussianSpec,
    t: &TransitionMatrix,
    eval_set: &Dataset,
) -> Result<f64> {
    let rows = delta1_per_row(model, spec, t, eval_set)?;
    Ok(rows.iter().sum::<f64>() / rows.len() as f64)
}

/// Ground-truth `P(Ȳ|Y')` for the labeling policy `model`: the average
/// oracle noisy posterior over `mc_samples` fresh points grouped by their
/// intermediate label. Empty groups get a one-hot row.
pub fn oracle_spade<M: PosteriorModel>(
    model: &M,
    spec: &GaussianSpec,
    t: &TransitionMatrix,
    mc_samples: usize,
    seed: u64,
) -> Result<TransitionMatrix> {
    let draw = generate(spec, mc_samples, seed)?;
    check_oracle(spec, t, &draw)?;
    let c = t.num_classes();
    let inter = intermediate_labels(model, &draw)?;
    let mut sums = vec![0.0; c * c];
    let mut counts = vec![0usize; c];
    for (x, &l) in draw.rows().zip(&inter.labels) {
        let p = oracle_noisy_posterior(x, spec, t)?;
        counts[l] += 1;
        for (s, v) in sums[l * c..(l + 1) * c].iter_mut().zip(p.probs()) {
            *s += v;
        }
    }
    for l in 0..c {
        let row = &mut sums[l * c..(l + 1) * c];
        if counts[l] == 0 {
            row.iter_mut().enumerate().for_each(|(j, v)| *v = f64::from(u8::from(j == l)));
        } else {
            row.iter_mut().for_each(|v| *v /= counts[l] as f64);
        }
    }
    TransitionMatrix::from_flat_renormalized(c, sums)
}

/// Mean entrywise gap between a counted `T̂♠` and [`oracle_spade`].
pub fn measure_delta2<M: PosteriorModel>(
    counted: &TransitionMatrix,
    model: &M,
    spec: &GaussianSpec,
    t: &TransitionMatrix,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    let truth = oracle_spade(model, spec, t, mc_samples, seed)?;
    let c = counted.num_classes();
    Ok(l1_matrix_distance(counted, &truth)? / (c * c) as f64)
}

/// Per-row Δ3(x), averaged over classes; needs clean labels.
pub fn delta3_per_row(
    spec: &GaussianSpec,
    t: &TransitionMatrix,
    eval_set: &Dataset,
) -> Result<Vec<f64>> {
    check_oracle(spec, t, eval_set)?;
    let clean = eval_set.require_clean()?;
    eval_set
        .rows()
        .zip(clean)
        .map(|(x, &y)| Ok(mean_abs(t.row(y), oracle_noisy_posterior(x, spec, t)?.probs())))
        .collect()
}

/// Mean Δ3 over `eval_set`. The intermediate label does not enter either
/// conditional under class-dependent noise, so no model is needed.
pub fn measure_delta3(spec: &GaussianSpec, t: &TransitionMatrix, eval_set: &Dataset) -> Result<f64> {
    let rows = delta3_per_row(spec, t, eval_set)?;
    Ok(rows.iter().sum::<f64>() / rows.len() as f64)
}

/// Settings for [`audit_theorem1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub mc_samples: usize,
    pub seed: u64,
    pub bound_slack: f64,
}

/// Full audit output: the delta report plus both estimator reports it was
/// computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremAudit {
    pub report: DeltaReport,
    pub t: EstimationReport,
    pub dual: EstimationReport,
}

/// Runs both estimators on `data` (training rows with clean and noisy
/// labels), measures the three deltas there, and checks
/// `ε_DT ≤ C²(Δ2 + Δ3) + slack`.
pub fn audit_theorem1<M: PosteriorModel>(
    model: &M,
    spec: &GaussianSpec,
    t: &TransitionMatrix,
    data: &Dataset,
    cfg: AuditConfig,
) -> Result<TheoremAudit> {
    check_oracle(spec, t, data)?;
    let t_report = t_estimate(model, data)?.with_ground_truth(t)?.with_seed(cfg.seed);
    let dual = dual_t_estimate(model, data)?.with_ground_truth(t)?.with_seed(cfg.seed);
    let eps_t = t_report.l1_error.expect("ground truth attached");
    let eps_dt = dual.l1_error.expect("ground truth attached");

    let spade = &dual.factors.as_ref().expect("dual-T factors").spade;
    let delta2 = measure_delta2(spade, model, spec, t, cfg.mc_samples, cfg.seed)?;
    let d1 = delta1_per_row(model, spec, t, data)?;
    let d3 = delta3_per_row(spec, t, data)?;
    let n = data.len() as f64;
    let delta1_mean = d1.iter().sum::<f64>() / n;
    let delta3_mean = d3.iter().sum::<f64>() / n;
    let holds = d1.iter().zip(&d3).filter(|(a, b)| **a >= delta2 + **b).count();

    let c2 = (t.num_classes() * t.num_classes()) as f64;
    let bound = c2 * (delta2 + delta3_mean);
    let report = DeltaReport {
        delta1_mean,
        delta2_mean: delta2,
        delta3_mean,
        eps_t,
        eps_dt,
        bound,
        bound_slack: cfg.bound_slack,
        bound_holds: eps_dt <= bound + cfg.bound_slack,
        dual_t_better: eps_dt < eps_t,
        assumption1_fraction: holds as f64 / n,
        sample_size: data.len(),
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
    };
    Ok(TheoremAudit { report, t: t_report, dual })
}

/// Intermediate labels copied from the noisy labels, the `Y' = Ȳ` limit.
pub fn noisy_as_intermediate(data: &Dataset) -> Result<IntermediateLabeling> {
    Ok(IntermediateLabeling { labels: data.require_noisy()?.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::PosteriorVector;
    use crate::noise::symmetric_matrix;
    use crate::synth::NoisyOracle;
    use approx::assert_abs_diff_eq;

    struct Uniform(usize);

    impl PosteriorModel for Uniform {
        fn num_classes(&self) -> usize {
            2
        }
        fn input_dim(&self) -> usize {
            self.0
        }
        fn posterior(&self, _x: &[f64]) -> Result<PosteriorVector> {
            Ok(PosteriorVector::uniform(2))
        }
    }

    fn sym20() -> TransitionMatrix {
        symmetric_matrix(2, 0.2).unwrap()
    }

    #[test]
    fn delta1_examples() {
        let spec = GaussianSpec::default();
        let data = generate(&spec, 200, 3).unwrap();
        let oracle = NoisyOracle::new(spec.clone(), sym20()).unwrap();
        assert_eq!(measure_delta1(&oracle, &spec, &sym20(), &data).unwrap(), 0.0);

        let near = Dataset::new(vec![2.0; 10], 10, Some(vec![1]), None, 2).unwrap();
        let d1 = measure_delta1(&Uniform(10), &spec, &sym20(), &near).unwrap();
        assert_abs_diff_eq!(d1, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn oracle_unavailable_off_task() {
        let spec = GaussianSpec::default();
        let other = Dataset::new(vec![0.0; 3], 3, Some(vec![0]), None, 2).unwrap();
        assert!(matches!(
            measure_delta1(&Uniform(3), &spec, &sym20(), &other),
            Err(Error::OracleUnavailable)
        ));
        let t3 = symmetric_matrix(3, 0.2).unwrap();
        let d = generate(&spec, 5, 0).unwrap();
        assert!(matches!(measure_delta3(&spec, &t3, &d), Err(Error::OracleUnavailable)));
        let unlabeled = Dataset::new(vec![0.0; 10], 10, None, None, 2).unwrap();
        assert!(matches!(measure_delta3(&spec, &sym20(), &unlabeled), Err(Error::MissingCleanLabels)));
    }

    #[test]
    fn delta3_examples() {
        let spec = GaussianSpec::default();
        // Far on the class-1 side the clean posterior is one-hot up to 1e-30.
        let anchor = Dataset::new(vec![6.0; 10], 10, Some(vec![1]), None, 2).unwrap();
        assert!(measure_delta3(&spec, &sym20(), &anchor).unwrap() < 1e-15);
        let mid = Dataset::new(vec![1.0; 10], 10, Some(vec![0]), None, 2).unwrap();
        assert_abs_diff_eq!(measure_delta3(&spec, &sym20(), &mid).unwrap(), 0.3, epsilon = 1e-12);
        // Clean world, perfect model.
        let id = TransitionMatrix::identity(2).unwrap();
        let d = generate(&spec, 300, 4).unwrap();
        let d3 = measure_delta3(&spec, &id, &d).unwrap();
        let bayes_ok = d
            .rows()
            .zip(d.clean_labels().unwrap())
            .all(|(x, &y)| crate::synth::oracle_clean_posterior(x, &spec).unwrap()[y] > 0.999);
        if bayes_ok {
            assert!(d3 < 1e-3);
        }
    }

    #[test]
    fn delta2_self_comparison_is_zero() {
        let spec = GaussianSpec::default();
        let oracle = NoisyOracle::new(spec.clone(), sym20()).unwrap();
        let truth = oracle_spade(&oracle, &spec, &sym20(), 5_000, 17).unwrap();
        let d2 = measure_delta2(&truth, &oracle, &spec, &sym20(), 5_000, 17).unwrap();
        assert_eq!(d2, 0.0);
    }

    #[test]
    fn delta2_shrinks_with_sample_size() {
        use crate::estimators::count_spade;
        use crate::noise::corrupt;
        let spec = GaussianSpec::default();
        let t = sym20();
        let oracle = NoisyOracle::new(spec.clone(), t.clone()).unwrap();
        let delta2_at = |n: usize, seed: u64| {
            let d = corrupt(&generate(&spec, n, seed).unwrap(), &t, seed + 1).unwrap();
            let inter = intermediate_labels(&oracle, &d).unwrap();
            let counted = count_spade(&inter, d.noisy_labels().unwrap(), 2).unwrap().matrix;
            measure_delta2(&counted, &oracle, &spec, &t, 200_000, 99).unwrap()
        };
        let small: f64 = (0..5).map(|s| delta2_at(100, 10 * s)).sum::<f64>() / 5.0;
        let large: f64 = (0..5).map(|s| delta2_at(20_000, 10 * s)).sum::<f64>() / 5.0;
        assert!(large < small, "Δ2 large-n {large} vs small-n {small}");
        assert!(large < 0.01);
    }

    #[test]
    fn audit_is_internally_consistent() {
        use crate::noise::corrupt;
        let spec = GaussianSpec::default();
        let t = sym20();
        let d = corrupt(&generate(&spec, 2_000, 21).unwrap(), &t, 22).unwrap();
        let oracle = NoisyOracle::new(spec.clone(), t.clone()).unwrap();
        let cfg = AuditConfig { mc_samples: 20_000, seed: 5, bound_slack: DEFAULT_BOUND_SLACK };
        let audit = audit_theorem1(&oracle, &spec, &t, &d, cfg).unwrap();
        let r = &audit.report;
        assert_eq!(r.eps_t, l1_matrix_distance(&audit.t.estimated, &t).unwrap());
        assert_eq!(r.eps_dt, l1_matrix_distance(&audit.dual.estimated, &t).unwrap());
        assert_eq!(r.delta1_mean, 0.0);
        assert!([r.delta1_mean, r.delta2_mean, r.delta3_mean].iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!((0.0..=1.0).contains(&r.assumption1_fraction));
        let again = audit_theorem1(&oracle, &spec, &t, &d, cfg).unwrap();
        assert_eq!(again, audit);
    }
}
