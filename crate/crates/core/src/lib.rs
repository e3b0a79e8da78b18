//! Transition-matrix estimation for learning with noisy labels.
//!
//! A transition matrix `T` is row-stochastic with
//! `T[i][j] = P(noisy = j | clean = i)`. This crate provides
//!
//! * synthetic two-Gaussian data with a closed-form Bayes posterior ([`synth`]),
//! * symmetric and pair-flip label corruption ([`noise`]),
//! * a small MLP trained with mini-batch SGD ([`model`]),
//! * the anchor-point estimator and the dual-T estimator ([`estimators`]),
//! * forward and importance-reweighting loss correction ([`corrections`]),
//! * error-decomposition diagnostics against the oracle ([`deltas`]),
//! * seeded sample-size sweeps with CSV output and SVG plots ([`sweep`], [`plot`]).
//!
//! Every random draw flows from an explicit `u64` seed; see [`seed`].

pub mod corrections;
pub mod dataset;
pub mod deltas;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod model;
pub mod noise;
pub mod plot;
pub mod seed;
pub mod sweep;
pub mod synth;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimators::{dual_t_estimate, t_estimate, EstimationReport, EstimatorKind};
pub use matrix::{apply_transition, l1_matrix_distance, PosteriorVector, TransitionMatrix};
pub use model::{train, LossAdapter, NetworkSpec, PosteriorModel, TrainConfig, TrainedModel};
pub use noise::{corrupt, NoiseKind};
pub use synth::{generate, GaussianSpec};
