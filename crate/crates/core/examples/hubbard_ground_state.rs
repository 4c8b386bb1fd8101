//! Ground state of the reference model and the energy as a 2-RDM contraction.

use rdm_completion::fock::enumerate_sector;
use rdm_completion::hamiltonian::{build_hubbard, ground_state, reduce_to_two_body, HubbardParams};
use rdm_completion::rdm::{energy_from_rdm, two_rdm_from_state};

fn main() -> rdm_completion::Result<()> {
    let params = HubbardParams::reference();
    let basis = enumerate_sector(params.n_sites, 2, 1)?;
    let h = build_hubbard(&params, &basis)?;
    let gs = ground_state(&h, 1e-8)?;
    println!(
        "E0 = {:.12}, E1 = {:.12}, gap = {:.6}",
        gs.energy,
        gs.excited_energy.unwrap(),
        gs.gap
    );

    let h2 = reduce_to_two_body(&params, basis.n_particles())?;
    let gamma = two_rdm_from_state(&gs.state, &basis)?;
    let e = energy_from_rdm(&h2, &gamma)?;
    println!(
        "Tr(²H ²Γ) = {e:.12} (difference {:.1e})",
        (e - gs.energy).abs()
    );
    println!(
        "trace ²Γ = {:.12} (N(N-1) = {})",
        gamma.trace().re,
        basis.n_particles() * (basis.n_particles() - 1)
    );
    println!("smallest ²Γ eigenvalue = {:.3e}", gamma.min_eigenvalue());
    Ok(())
}
