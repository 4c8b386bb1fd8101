//! Determinants, ladder-operator signs and sector enumeration.

use rdm_completion::fock::{
    apply_annihilation, apply_creation, apply_excitation_string, enumerate_sector, Determinant,
    Ladder, Spin, SpinOrbital,
};

fn main() -> rdm_completion::Result<()> {
    let up1 = SpinOrbital::new(1, Spin::Up).index();
    let dn0 = SpinOrbital::new(0, Spin::Down).index();
    println!("orbital index of 1↑ = {up1}, of 0↓ = {dn0}");

    let det = Determinant::from_orbitals(&[0, 1, 2]);
    println!(
        "|{:06b}⟩ holds {} particles",
        det.bits(),
        det.particle_count()
    );
    for p in 0..3 {
        let (out, sign) = apply_annihilation(det, p).expect("occupied");
        println!("a_{p} |{:06b}⟩ = {sign:+} |{:06b}⟩", det.bits(), out.bits());
    }
    println!("a†_0 on an occupied orbital: {:?}", apply_creation(det, 0));

    // hop 0↑ -> 1↑ written left to right, applied right to left
    let hop = [Ladder::Create(2), Ladder::Annihilate(0)];
    if let Some((out, sign)) = apply_excitation_string(Determinant::from_orbitals(&[0, 1]), &hop) {
        println!("a†_2 a_0 |{:06b}⟩ = {sign:+} |{:06b}⟩", 0b11, out.bits());
    }

    let basis = enumerate_sector(3, 2, 1)?;
    println!("sector (2↑, 1↓) on 3 sites: {} determinants", basis.dim());
    for (i, d) in basis.dets().iter().enumerate() {
        println!("  {i}: {:06b}", d.bits());
    }
    Ok(())
}
