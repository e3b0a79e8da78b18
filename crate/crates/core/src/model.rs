//! Feed-forward ReLU classifiers trained by mini-batch SGD on noisy labels.
//!
//! Training keeps the snapshot with the best noisy-label validation
//! accuracy (earliest epoch on ties), which limits memorisation of label
//! noise. The resulting softmax output is the estimated noisy class
//! posterior used by the transition-matrix estimators.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corrections::{ce_into, forward_into, softmax_into, Reweighting};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{argmax, PosteriorVector, TransitionMatrix};
use crate::seed;

/// Anything that maps a feature row to a class posterior.
pub trait PosteriorModel {
    fn num_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn posterior(&self, x: &[f64]) -> Result<PosteriorVector>;

    /// Posterior for every row of `data`.
    fn posteriors(&self, data: &Dataset) -> Result<Vec<PosteriorVector>> {
        if data.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: data.dim() });
        }
        data.rows().map(|x| self.posterior(x)).collect()
    }
}

impl<M: PosteriorModel + ?Sized> PosteriorModel for &M {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn posterior(&self, x: &[f64]) -> Result<PosteriorVector> {
        (**self).posterior(x)
    }

    fn posteriors(&self, data: &Dataset) -> Result<Vec<PosteriorVector>> {
        (**self).posteriors(data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

/// Training objective. The corrected variants carry the transition matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossAdapter {
    #[default]
    PlainCe,
    Forward { matrix: TransitionMatrix },
    Reweight { matrix: TransitionMatrix },
}

impl LossAdapter {
    pub fn matrix(&self) -> Option<&TransitionMatrix> {
        match self {
            LossAdapter::PlainCe => None,
            LossAdapter::Forward { matrix } | LossAdapter::Reweight { matrix } => Some(matrix),
        }
    }

    fn prepare(&self) -> Result<PreparedLoss> {
        Ok(match self {
            LossAdapter::PlainCe => PreparedLoss::PlainCe,
            LossAdapter::Forward { matrix } => PreparedLoss::Forward(matrix.clone()),
            LossAdapter::Reweight { matrix } => {
                PreparedLoss::Reweight(Reweighting::new(matrix.clone())?)
            }
        })
    }
}

enum PreparedLoss {
    PlainCe,
    Forward(TransitionMatrix),
    Reweight(Reweighting),
}

impl PreparedLoss {
    fn eval(&self, logits: &[f64], label: usize, grad: &mut [f64]) -> f64 {
        match self {
            PreparedLoss::PlainCe => ce_into(logits, label, grad),
            PreparedLoss::Forward(t) => forward_into(logits, label, t, grad),
            PreparedLoss::Reweight(r) => r.loss_into(logits, label, grad).0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub num_classes: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub loss_adapter: LossAdapter,
}

impl NetworkSpec {
    /// Two hidden layers of 25 units, plain cross-entropy.
    pub fn synthetic(input_dim: usize, num_classes: usize) -> Self {
        NetworkSpec {
            input_dim,
            hidden_sizes: vec![25, 25],
            num_classes,
            activation: Activation::Relu,
            loss_adapter: LossAdapter::PlainCe,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if let Some(m) = self.loss_adapter.matrix() {
            if m.num_classes() != self.num_classes {
                return Err(Error::DimensionMismatch {
                    expected: self.num_classes,
                    found: m.num_classes(),
                });
            }
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim];
        sizes.extend(&self.hidden_sizes);
        sizes.push(self.num_classes);
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_decay_factor: f64,
    /// Epochs with index `>= lr_decay_epoch` (0-based) use the decayed rate.
    pub lr_decay_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            lr_initial: 0.01,
            lr_decay_factor: 10.0,
            lr_decay_epoch: 50,
            batch_size: 128,
            seed: 0,
            val_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        if self.lr_decay_epoch > self.epochs {
            return Err(Error::InvalidConfig("lr_decay_epoch exceeds epochs".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidConfig("val_fraction must be in (0, 1)".into()));
        }
        if !(self.lr_initial > 0.0 && self.lr_decay_factor > 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        Ok(())
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if epoch >= self.lr_decay_epoch {
            self.lr_initial / self.lr_decay_factor
        } else {
            self.lr_initial
        }
    }
}

/// Dense layer, weights row-major `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    /// Weights and biases uniform on `[-1/sqrt(inputs), 1/sqrt(inputs)]`.
    fn fan_in_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = 1.0 / (inputs as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..=limit)).collect();
        let biases = (0..outputs).map(|_| rng.random_range(-limit..=limit)).collect();
        Layer { inputs, outputs, weights, biases }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.biases))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Network parameters plus the checkpoint metadata of training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
    #[serde(default)]
    pub history: Vec<EpochStats>,
}

/// Per-forward-pass buffers.
struct Scratch {
    /// `acts[0]` is the input; `acts[k]` the output of layer `k-1`.
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(sizes: &[usize]) -> Self {
        Scratch {
            acts: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            deltas: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }
}

impl TrainedModel {
    /// Randomly initialised, untrained network.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng(seed);
        let sizes = spec.layer_sizes();
        let layers = sizes.windows(2).map(|w| Layer::fan_in_uniform(w[0], w[1], &mut rng)).collect();
        Ok(TrainedModel {
            spec: spec.clone(),
            layers,
            best_val_accuracy: 0.0,
            best_epoch: 0,
            history: Vec::new(),
        })
    }

    /// Network with every weight and bias zero (uniform posterior).
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let sizes = spec.layer_sizes();
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(TrainedModel {
            spec: spec.clone(),
            layers,
            best_val_accuracy: 0.0,
            best_epoch: 0,
            history: Vec::new(),
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch { expected: self.spec.input_dim, found: x.len() });
        }
        Ok(())
    }

    fn forward_into(&self, x: &[f64], scratch: &mut Scratch) {
        scratch.acts[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = scratch.acts.split_at_mut(k + 1);
            let out = &mut after[0];
            layer.forward(&before[k], out);
            if k != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
    }

    /// Adds this example's parameter gradient to `grads`, given
    /// `scratch.deltas[last]` already holding dL/dlogits.
    fn backward_into(&self, scratch: &mut Scratch, grads: &mut [Layer]) {
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let g = &mut grads[k];
            let (lower, upper) = scratch.deltas.split_at_mut(k + 1);
            let delta = &upper[0];
            let input = &scratch.acts[k];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, &a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if k > 0 {
                let prev = &mut lower[k];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(&scratch.acts[k]) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch::new(&self.spec.layer_sizes())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut s = self.scratch();
        self.forward_into(x, &mut s);
        Ok(s.acts.pop().unwrap_or_default())
    }

    /// Softmax of the logits.
    pub fn predict_posterior(&self, x: &[f64]) -> Result<PosteriorVector> {
        let logits = self.logits(x)?;
        let mut p = vec![0.0; logits.len()];
        softmax_into(&logits, &mut p);
        PosteriorVector::renormalized(p)
    }

    /// Argmax of the posterior, lowest class on ties.
    pub fn predict_label(&self, x: &[f64]) -> Result<usize> {
        Ok(self.predict_posterior(x)?.argmax())
    }

    /// Fraction of rows whose predicted label equals `labels`.
    pub fn accuracy(&self, data: &Dataset, labels: &[usize]) -> Result<f64> {
        if data.dim() != self.spec.input_dim {
            return Err(Error::DimensionMismatch { expected: self.spec.input_dim, found: data.dim() });
        }
        if labels.len() != data.len() {
            return Err(Error::DimensionMismatch { expected: data.len(), found: labels.len() });
        }
        let mut s = self.scratch();
        let correct = data
            .rows()
            .zip(labels)
            .filter(|(x, &y)| {
                self.forward_into(x, &mut s);
                argmax(s.acts.last().expect("output layer")) == y
            })
            .count();
        Ok(correct as f64 / data.len() as f64)
    }

    /// All weights and biases, layer by layer (weights before biases).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
        if params.len() != total {
            return Err(Error::DimensionMismatch { expected: total, found: params.len() });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Loss of the spec's adapter on one example and its gradient with
    /// respect to [`parameters`](Self::parameters).
    pub fn loss_and_gradient(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        if label >= self.spec.num_classes {
            return Err(Error::DimensionMismatch {
                expected: self.spec.num_classes,
                found: label + 1,
            });
        }
        let loss_fn = self.spec.loss_adapter.prepare()?;
        let mut s = self.scratch();
        let mut grads = self.zero_grads();
        let loss = self.example_step(x, label, &loss_fn, &mut s, &mut grads);
        let flat = grads
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect();
        Ok((loss, flat))
    }

    fn zero_grads(&self) -> Vec<Layer> {
        self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect()
    }

    fn example_step(
        &self,
        x: &[f64],
        label: usize,
        loss_fn: &PreparedLoss,
        s: &mut Scratch,
        grads: &mut [Layer],
    ) -> f64 {
        self.forward_into(x, s);
        let last = self.layers.len();
        let loss = loss_fn.eval(&s.acts[last], label, &mut s.deltas[last]);
        self.backward_into(s, grads);
        loss
    }
}

impl PosteriorModel for TrainedModel {
    fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn posterior(&self, x: &[f64]) -> Result<PosteriorVector> {
        self.predict_posterior(x)
    }
}

/// Uniformly random, unstratified split into `(train, val)`; the validation
/// part has `round(n * val_fraction)` rows, clamped so both sides are
/// non-empty.
pub fn split_train_val(data: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("val_fraction {val_fraction} not in (0, 1)")));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewSamples(format!("cannot split {n} rows")));
    }
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let mut val_idx = val_idx.to_vec();
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok((data.subset(&train_idx)?, data.subset(&val_idx)?))
}

/// Mini-batch SGD on the noisy labels of `train`, keeping the epoch with the
/// best noisy-label accuracy on `val`.
pub fn train(
    train: &Dataset,
    val: &Dataset,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    spec.validate()?;
    cfg.validate()?;
    for d in [train, val] {
        if d.dim() != spec.input_dim {
            return Err(Error::DimensionMismatch { expected: spec.input_dim, found: d.dim() });
        }
        if d.num_classes() != spec.num_classes {
            return Err(Error::DimensionMismatch {
                expected: spec.num_classes,
                found: d.num_classes(),
            });
        }
    }
    let labels = train.require_noisy()?;
    let val_labels = val.require_noisy()?;
    let loss_fn = spec.loss_adapter.prepare()?;

    let mut model = TrainedModel::init(spec, seed::derive(cfg.seed, 0))?;
    let mut shuffle_rng = seed::rng(seed::derive(cfg.seed, 1));
    let mut scratch = model.scratch();
    let mut grads = model.zero_grads();
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best: Option<(f64, usize, Vec<Layer>)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for g in &mut grads {
                g.weights.iter_mut().for_each(|v| *v = 0.0);
                g.biases.iter_mut().for_each(|v| *v = 0.0);
            }
            for &i in batch {
                let loss = model.example_step(train.row(i), labels[i], &loss_fn, &mut scratch, &mut grads);
                epoch_loss += loss;
            }
            if !epoch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            let step = lr / batch.len() as f64;
            for (layer, g) in model.layers.iter_mut().zip(&grads) {
                for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                    *w -= step * gw;
                }
                for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                    *b -= step * gb;
                }
            }
        }
        let val_accuracy = model.accuracy(val, val_labels)?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            val_accuracy,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| val_accuracy > *acc) {
            best = Some((val_accuracy, epoch, model.layers.clone()));
        }
    }

    let (best_val_accuracy, best_epoch, layers) = best.expect("at least one epoch");
    model.layers = layers;
    model.best_val_accuracy = best_val_accuracy;
    model.best_epoch = best_epoch;
    model.history = history;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::symmetric_matrix;
    use approx::assert_abs_diff_eq;

    fn toy() -> Dataset {
        let x = vec![-2.0, -1.5, -1.0, -2.5, 2.0, 1.5, 1.0, 2.5];
        Dataset::new(x, 2, None, Some(vec![0, 0, 1, 1]), 2).unwrap()
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let d = toy();
        let spec = NetworkSpec { hidden_sizes: vec![8], ..NetworkSpec::synthetic(2, 2) };
        let cfg = TrainConfig { epochs: 200, lr_initial: 0.1, lr_decay_epoch: 150, batch_size: 2, seed: 3, ..Default::default() };
        let m = train(&d, &d, &spec, &cfg).unwrap();
        assert_eq!(m.best_val_accuracy, 1.0);
        assert_eq!(m.accuracy(&d, d.noisy_labels().unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let d = toy();
        let spec = NetworkSpec::synthetic(2, 2);
        let cfg = TrainConfig { epochs: 10, batch_size: 3, seed: 11, ..Default::default() };
        let cfg = TrainConfig { lr_decay_epoch: 5, ..cfg };
        let a = train(&d, &d, &spec, &cfg).unwrap();
        let b = train(&d, &d, &spec, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train(&d, &d, &spec, &TrainConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.layers, c.layers);
    }

    #[test]
    fn zero_weights_give_uniform_posterior() {
        let m = TrainedModel::zeros(&NetworkSpec::synthetic(3, 4)).unwrap();
        let p = m.predict_posterior(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(p.probs(), &[0.25; 4]);
        assert_eq!(m.predict_label(&[0.0, 0.0, 0.0]).unwrap(), 0);
        assert!(m.predict_posterior(&[1.0]).is_err());
    }

    #[test]
    fn logits_twenty_zero() {
        let spec = NetworkSpec { hidden_sizes: vec![], ..NetworkSpec::synthetic(1, 2) };
        let mut m = TrainedModel::zeros(&spec).unwrap();
        m.set_parameters(&[0.0, 0.0, 20.0, 0.0]).unwrap();
        let p = m.predict_posterior(&[0.7]).unwrap();
        assert_abs_diff_eq!(p[1], 2.0611536181902037e-9, epsilon = 1e-20);
        assert_abs_diff_eq!(p[0], 1.0 - 2.0611536181902037e-9, epsilon = 1e-16);
        assert_eq!(m.predict_label(&[0.7]).unwrap(), 0);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = Dataset::new((0..10).map(f64::from).collect(), 1, None, None, 2).unwrap();
        let (tr, va) = split_train_val(&d, 0.2, 5).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        let (tr2, va2) = split_train_val(&d, 0.2, 5).unwrap();
        assert_eq!((tr.clone(), va.clone()), (tr2, va2));
        let mut all: Vec<f64> = tr.features().iter().chain(va.features()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(f64::from).collect::<Vec<_>>());
        let one = Dataset::new(vec![1.0], 1, None, None, 2).unwrap();
        assert!(matches!(split_train_val(&one, 0.2, 0), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn unstratified_split_preserves_class_shares() {
        let spec = crate::synth::GaussianSpec::default();
        let d = crate::synth::generate(&spec, 100_000, 8).unwrap();
        let d = crate::noise::corrupt(&d, &symmetric_matrix(2, 0.2).unwrap(), 9).unwrap();
        let (_, va) = split_train_val(&d, 0.2, 10).unwrap();
        let share = |labels: &[usize]| labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
        let overall = share(d.noisy_labels().unwrap());
        assert!((share(va.noisy_labels().unwrap()) - overall).abs() < 0.02);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { lr_decay_epoch: 101, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { val_fraction: 1.0, ..Default::default() }.validate().is_err());
        let cfg = TrainConfig::default();
        assert_eq!(cfg.learning_rate(49), 0.01);
        assert_abs_diff_eq!(cfg.learning_rate(50), 0.001, epsilon = 1e-18);
        let mut spec = NetworkSpec::synthetic(2, 2);
        spec.loss_adapter = LossAdapter::Forward { matrix: symmetric_matrix(3, 0.1).unwrap() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let mut spec = NetworkSpec::synthetic(3, 2);
        spec.loss_adapter = LossAdapter::Forward { matrix: symmetric_matrix(2, 0.2).unwrap() };
        let m = TrainedModel::init(&spec, 4).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains(r#""loss_adapter":{"kind":"forward","matrix":{"num_classes":2"#));
        let back: TrainedModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn diverging_training_is_reported() {
        let d = toy();
        let spec = NetworkSpec::synthetic(2, 2);
        let cfg = TrainConfig { epochs: 50, lr_initial: 1e200, lr_decay_epoch: 50, batch_size: 4, ..Default::default() };
        assert!(matches!(train(&d, &d, &spec, &cfg), Err(Error::NonFiniteLoss { .. })));
    }
}
