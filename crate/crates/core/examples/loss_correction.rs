//! Estimate T with dual-T, then retrain with forward and reweighting
//! correction and compare clean test accuracy with plain cross-entropy.
//!
//!     cargo run --release --example loss_correction

use noisyt::corrections::{train_corrected, CorrectionMethod};
use noisyt::sweep::{run_trial, SweepConfig};
use noisyt::{generate, EstimatorKind, NoiseKind, TrainConfig};

fn main() -> noisyt::Result<()> {
    let cfg = SweepConfig {
        noise_kind: NoiseKind::Pair,
        eps: 0.45,
        sample_sizes: vec![20_000],
        ..Default::default()
    };
    let trial = run_trial(&cfg, 20_000, 0)?;
    let t_hat = &trial.report(EstimatorKind::DualT).expect("dual-T ran").estimated;
    println!("dual-T estimate {:?}", t_hat.rows());

    let test = generate(&cfg.data, 20_000, 77)?;
    let labels = test.require_clean()?;
    println!("plain CE   clean accuracy {:.4}", trial.model.accuracy(&test, labels)?);
    let train_cfg = TrainConfig { seed: trial.train_seed, ..cfg.train.clone() };
    for method in [CorrectionMethod::Forward, CorrectionMethod::Reweight] {
        let m = train_corrected(&trial.train, &trial.val, t_hat, method, &cfg.network(), &train_cfg)?;
        println!("{method:<10?} clean accuracy {:.4}", m.accuracy(&test, labels)?);
    }
    Ok(())
}
