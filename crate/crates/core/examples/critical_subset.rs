//! Structural counts of the reference target in both bases.

use rdm_completion::experiment::{analyze_target, ExperimentConfig};
use rdm_completion::hamiltonian::BasisTag;

fn main() -> rdm_completion::Result<()> {
    for basis in [BasisTag::Site, BasisTag::PairEigen] {
        let config = ExperimentConfig {
            basis,
            ..ExperimentConfig::default()
        };
        let a = analyze_target(&config)?;
        println!(
            "{basis:>16}: {} positions, {} S_z non-zero, {} critical",
            a.counts.total, a.counts.sz_nonzero, a.counts.critical
        );
    }
    Ok(())
}
