//! Completes the reference ground-state 2-RDM from its critical subset.
//!
//! Usage: `cargo run --release --example noiseless_completion [seed]`

use rdm_completion::experiment::{run_completion, ExperimentConfig};

fn main() -> rdm_completion::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let config = ExperimentConfig {
        seed,
        ..ExperimentConfig::default()
    };
    let out = run_completion(&config)?;
    for r in out.trace.records.iter().step_by(200) {
        println!(
            "k={:>6}  D={:.3e}  D_full={:.3e}  |E-E0|={:.3e}  1-F={:.3e}  θmax={:.2e}",
            r.k,
            r.d_partial,
            r.d_full,
            r.energy_dev.abs(),
            r.infidelity,
            r.theta_max
        );
    }
    print!("{}", out.summary.to_json_string());
    Ok(())
}
