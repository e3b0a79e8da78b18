//! Per-example losses over logits: plain cross-entropy and the two
//! transition-matrix corrections (forward and importance reweighting).
//!
//! All functions return the loss together with its gradient with respect
//! to the logits. Probabilities entering a logarithm are floored at
//! [`PROB_FLOOR`].

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{transpose_action, TransitionMatrix};
use crate::model::{self, LossAdapter, NetworkSpec, TrainConfig, TrainedModel};

pub const PROB_FLOOR: f64 = 1e-12;

/// Loss value, gradient w.r.t. logits, and the per-example weight
/// (1 except for reweighting).
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub weight: f64,
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

pub(crate) fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

fn check_label(c: usize, label: usize) -> Result<()> {
    if label >= c {
        return Err(Error::DimensionMismatch { expected: c, found: label + 1 });
    }
    Ok(())
}

fn check_matrix(c: usize, t: &TransitionMatrix) -> Result<()> {
    if t.num_classes() != c {
        return Err(Error::DimensionMismatch { expected: t.num_classes(), found: c });
    }
    Ok(())
}

pub fn cross_entropy(logits: &[f64], label: usize) -> Result<LossValue> {
    check_label(logits.len(), label)?;
    let mut grad = vec![0.0; logits.len()];
    let loss = ce_into(logits, label, &mut grad);
    Ok(LossValue { loss, grad, weight: 1.0 })
}

/// Softmax cross-entropy; `grad` receives `p - e_label`, or zero when the
/// label probability is floored.
pub(crate) fn ce_into(logits: &[f64], label: usize, grad: &mut [f64]) -> f64 {
    softmax_into(logits, grad);
    let py = grad[label];
    if py < PROB_FLOOR {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return -PROB_FLOOR.ln();
    }
    grad[label] -= 1.0;
    -py.ln()
}

/// Forward correction: cross-entropy of the transition-mapped posterior
/// `p̄ = Tᵀ softmax(logits)` against the noisy label.
pub fn forward_loss(logits: &[f64], label: usize, t: &TransitionMatrix) -> Result<LossValue> {
    check_label(logits.len(), label)?;
    check_matrix(logits.len(), t)?;
    let mut grad = vec![0.0; logits.len()];
    let loss = forward_into(logits, label, t, &mut grad);
    Ok(LossValue { loss, grad, weight: 1.0 })
}

pub(crate) fn forward_into(
    logits: &[f64],
    label: usize,
    t: &TransitionMatrix,
    grad: &mut [f64],
) -> f64 {
    softmax_into(logits, grad);
    let mut noisy = 0.0;
    for (i, &p) in grad.iter().enumerate() {
        noisy += t.get(i, label) * p;
    }
    if noisy < PROB_FLOOR {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return -PROB_FLOOR.ln();
    }
    // dL/dz_k = p_k - p_k T_ky / p̄_y; with T = I this is exactly p - e_y.
    for (k, g) in grad.iter_mut().enumerate() {
        *g -= (*g * t.get(k, label)) / noisy;
    }
    -noisy.ln()
}

/// Importance reweighting with a cached `(Tᵀ)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reweighting {
    transition: TransitionMatrix,
    transpose_inverse: Vec<f64>,
}

impl Reweighting {
    /// Fails with [`Error::SingularMatrix`] when `t` is not invertible.
    pub fn new(t: TransitionMatrix) -> Result<Self> {
        let transpose_inverse = t.transpose_inverse()?;
        Ok(Reweighting { transition: t, transpose_inverse })
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    /// Weight `q_y / (Tᵀ q)_y`, where `q` is the clipped and renormalized
    /// clean posterior inferred from the noisy posterior `p`.
    pub fn weight(&self, p: &[f64], label: usize) -> f64 {
        let c = p.len();
        let mut q = vec![0.0; c];
        for (k, qk) in q.iter_mut().enumerate() {
            let row = &self.transpose_inverse[k * c..(k + 1) * c];
            *qk = row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>().clamp(0.0, 1.0);
        }
        let sum: f64 = q.iter().sum();
        if sum > 0.0 {
            q.iter_mut().for_each(|v| *v /= sum);
        } else {
            q.iter_mut().for_each(|v| *v = 1.0 / c as f64);
        }
        let noisy = transpose_action(&self.transition, &q)[label];
        q[label] / noisy.max(PROB_FLOOR)
    }

    pub fn loss(&self, logits: &[f64], label: usize) -> Result<LossValue> {
        check_label(logits.len(), label)?;
        check_matrix(logits.len(), &self.transition)?;
        let mut grad = vec![0.0; logits.len()];
        let (loss, weight) = self.loss_into(logits, label, &mut grad);
        Ok(LossValue { loss, grad, weight })
    }

    /// Weighted cross-entropy; the weight is held constant in the gradient.
    pub(crate) fn loss_into(&self, logits: &[f64], label: usize, grad: &mut [f64]) -> (f64, f64) {
        softmax_into(logits, grad);
        let weight = self.weight(grad, label);
        let py = grad[label];
        if py < PROB_FLOOR {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return (weight * -PROB_FLOOR.ln(), weight);
        }
        grad[label] -= 1.0;
        grad.iter_mut().for_each(|g| *g *= weight);
        (weight * -py.ln(), weight)
    }
}

/// One-shot reweighting loss; inverts `t` on every call.
pub fn reweight_loss(logits: &[f64], label: usize, t: &TransitionMatrix) -> Result<LossValue> {
    Reweighting::new(t.clone())?.loss(logits, label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionMethod {
    Forward,
    Reweight,
}

impl CorrectionMethod {
    pub fn adapter(self, t: TransitionMatrix) -> Result<LossAdapter> {
        Ok(match self {
            CorrectionMethod::Forward => LossAdapter::Forward { matrix: t },
            CorrectionMethod::Reweight => {
                // Surface singular matrices before any training happens.
                Reweighting::new(t.clone())?;
                LossAdapter::Reweight { matrix: t }
            }
        })
    }
}

/// Trains with the loss adapter for `method` carrying `t_hat`.
pub fn train_corrected(
    noisy_train: &Dataset,
    noisy_val: &Dataset,
    t_hat: &TransitionMatrix,
    method: CorrectionMethod,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    let spec = NetworkSpec { loss_adapter: method.adapter(t_hat.clone())?, ..spec.clone() };
    model::train(noisy_train, noisy_val, &spec, cfg)
}
