//! Train the 25-25 ReLU network on Sym-20 noisy labels and report the
//! checkpoint picked by noisy validation accuracy.
//!
//!     cargo run --release --example train_classifier

use noisyt::model::split_train_val;
use noisyt::{corrupt, generate, train, GaussianSpec, NetworkSpec, NoiseKind, TrainConfig};

fn main() -> noisyt::Result<()> {
    let spec = GaussianSpec::default();
    let data = corrupt(&generate(&spec, 10_000, 11)?, &NoiseKind::Sym.matrix(2, 0.2)?, 12)?;
    let cfg = TrainConfig { seed: 13, ..Default::default() };
    let (tr, val) = split_train_val(&data, cfg.val_fraction, 14)?;

    let model = train(&tr, &val, &NetworkSpec::synthetic(spec.dim, 2), &cfg)?;
    for h in model.history.iter().step_by(10) {
        println!("epoch {:>3}  loss {:.4}  val acc {:.4}", h.epoch, h.train_loss, h.val_accuracy);
    }
    println!("best epoch {} with noisy val accuracy {:.4}", model.best_epoch, model.best_val_accuracy);

    let test = generate(&spec, 5_000, 15)?;
    println!("clean test accuracy {:.4}", model.accuracy(&test, test.require_clean()?)?);
    Ok(())
}
