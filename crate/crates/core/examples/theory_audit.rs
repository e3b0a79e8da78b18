//! Measure Δ1, Δ2, Δ3 for a trained model against the analytic oracle and
//! check the dual-T error bound.
//!
//!     cargo run --release --example theory_audit

use noisyt::deltas::{audit_theorem1, AuditConfig, DEFAULT_BOUND_SLACK};
use noisyt::sweep::{run_trial, SweepConfig};

fn main() -> noisyt::Result<()> {
    let cfg = SweepConfig { sample_sizes: vec![20_000], ..Default::default() };
    let trial = run_trial(&cfg, 20_000, 0)?;
    let audit_cfg = AuditConfig {
        mc_samples: 10 * trial.train.len(),
        seed: 3,
        bound_slack: DEFAULT_BOUND_SLACK,
    };
    let audit = audit_theorem1(&trial.model, &cfg.data, &trial.truth, &trial.train, audit_cfg)?;
    println!("{}", serde_json::to_string_pretty(&audit.report)?);
    Ok(())
}
