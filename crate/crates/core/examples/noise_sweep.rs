//! Distances reached for noisy targets, one run per noise strength.

use rdm_completion::experiment::{run_noise_sweep, ExperimentConfig};

fn main() -> rdm_completion::Result<()> {
    let config = ExperimentConfig::default();
    let table = run_noise_sweep(&config, &config.sweep.epsilons)?;
    println!("squared Hilbert–Schmidt distances of the best state");
    println!(
        "{:>8} {:>14} {:>14} {:>14}",
        "ε", "S vs noisy", "S vs clean", "full vs clean"
    );
    for r in &table.rows {
        println!(
            "{:>8.0e} {:>14.3e} {:>14.3e} {:>14.3e}",
            r.epsilon,
            r.d_min.powi(2),
            r.d_critical_clean.powi(2),
            r.d_full_clean.powi(2)
        );
    }
    Ok(())
}
