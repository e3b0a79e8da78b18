//! A small sample-size sweep written as CSV plus an SVG error plot.
//!
//!     cargo run --release --example sweep_and_plot -- [out_dir]

use std::path::PathBuf;

use noisyt::sweep::{emit_csv, run_sweep, SweepConfig};
use noisyt::{plot, NoiseKind};

fn main() -> noisyt::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let cfg = SweepConfig {
        noise_kind: NoiseKind::Pair,
        eps: 0.45,
        sample_sizes: vec![1_000, 2_000, 5_000],
        repeats: 3,
        ..Default::default()
    };
    let result = run_sweep(&cfg)?;
    for a in &result.aggregates {
        println!("n={:<5} {:<6} {:.4} ± {:.4}", a.n, a.estimator, a.mean_l1_error, a.std_l1_error);
    }
    let csv = dir.join("noisyt_sweep.csv");
    emit_csv(&result, &csv)?;
    plot::emit_plot(&result, &dir.join("noisyt_sweep.svg"))?;
    println!("wrote {} and the _agg.csv and .svg siblings", csv.display());
    Ok(())
}
