//! Completion in the eigenbasis of the reduced Hamiltonian, where the
//! critical subset is much smaller.

use rdm_completion::experiment::{run_completion, ExperimentConfig};
use rdm_completion::hamiltonian::BasisTag;

fn main() -> rdm_completion::Result<()> {
    let config = ExperimentConfig {
        basis: BasisTag::PairEigen,
        ..ExperimentConfig::default()
    };
    let out = run_completion(&config)?;
    let a = out.summary.anneal.unwrap();
    println!("critical positions: {}", out.summary.counts.critical);
    println!("D_min = {:.3e} at iteration {}", a.d_min, a.d_min_iteration);
    println!("full distance = {:.3e}", a.full_distance);
    println!("infidelity = {:.3e}", a.infidelity);
    println!("|E - E0| = {:.3e}", a.energy_deviation.abs());
    Ok(())
}
