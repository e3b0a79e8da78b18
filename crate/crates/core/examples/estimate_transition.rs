//! Fit one model on noisy labels and estimate T with both estimators,
//! printing the two dual-T factors alongside.
//!
//!     cargo run --release --example estimate_transition -- [sym|pair] [eps] [n]

use noisyt::sweep::{run_trial, SweepConfig};
use noisyt::{EstimatorKind, NoiseKind};

fn main() -> noisyt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let noise_kind: NoiseKind = args.first().map_or(Ok(NoiseKind::Sym), |s| s.parse())?;
    let eps: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20_000);

    let cfg = SweepConfig { noise_kind, eps, sample_sizes: vec![n], ..Default::default() };
    let trial = run_trial(&cfg, n, 0)?;
    println!("true T      {:?}", trial.truth.rows());
    for kind in [EstimatorKind::T, EstimatorKind::DualT] {
        let r = trial.report(kind).expect("both estimators run");
        println!("{kind:<6} T̂  {:?}  l1 {:.4}", r.estimated.rows(), r.l1_error.unwrap_or(f64::NAN));
        if let Some(f) = &r.factors {
            println!("       T♣  {:?}", f.club.rows());
            println!("       T♠  {:?}", f.spade.rows());
        }
    }
    Ok(())
}
