//! Sample the two-Gaussian task, flip labels with a pair-flip matrix, and
//! compare the empirical clean-to-noisy confusion with the true matrix.
//!
//!     cargo run --release --example generate_and_corrupt

use noisyt::synth::oracle_clean_posterior;
use noisyt::{corrupt, generate, GaussianSpec, NoiseKind};

fn main() -> noisyt::Result<()> {
    let spec = GaussianSpec::default();
    let clean = generate(&spec, 20_000, 1)?;
    let t = NoiseKind::Pair.matrix(2, 0.45)?;
    let noisy = corrupt(&clean, &t, 2)?;

    let mut counts = [[0usize; 2]; 2];
    for (&y, &z) in noisy.require_clean()?.iter().zip(noisy.require_noisy()?) {
        counts[y][z] += 1;
    }
    println!("true T:      {:?}", t.rows());
    for (i, row) in counts.iter().enumerate() {
        let total = (row[0] + row[1]) as f64;
        println!("empirical {i}: [{:.4}, {:.4}]", row[0] as f64 / total, row[1] as f64 / total);
    }

    let x = noisy.row(0);
    println!("oracle clean posterior at row 0: {:?}", oracle_clean_posterior(x, &spec)?.probs());
    noisy.save_csv(std::env::temp_dir().join("noisyt_pair45.csv"))?;
    Ok(())
}
