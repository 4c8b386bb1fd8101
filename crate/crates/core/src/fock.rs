//! Fermionic Fock-space machinery.
//!
//! Spin-orbitals are flattened as `p = 2 * site + spin` with up = 0 and
//! down = 1. A [`Determinant`] is an occupation bitmask; its canonical sign
//! is that of `a†_{p1} a†_{p2} … a†_{pN} |vac⟩` with `p1 < p2 < … < pN`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Largest lattice supported by the bitmask representation.
pub const MAX_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    fn offset(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital {
    pub site: usize,
    pub spin: Spin,
}

impl SpinOrbital {
    pub fn new(site: usize, spin: Spin) -> Self {
        Self { site, spin }
    }

    pub fn index(self) -> usize {
        2 * self.site + self.spin.offset()
    }

    pub fn from_index(p: usize) -> Self {
        let spin = if p.is_multiple_of(2) { Spin::Up } else { Spin::Down };
        Self { site: p / 2, spin }
    }
}

/// Spin of a flat spin-orbital index.
pub fn spin_of(p: usize) -> Spin {
    SpinOrbital::from_index(p).spin
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Determinant(u32);

impl Determinant {
    pub const VACUUM: Determinant = Determinant(0);

    pub fn from_bits(bits: u32) -> Self {
        Determinant(bits)
    }

    pub fn from_orbitals(orbitals: &[usize]) -> Self {
        let bits = orbitals.iter().fold(0u32, |acc, &p| {
            assert!(p < 2 * MAX_SITES, "orbital {p} out of range");
            acc | (1 << p)
        });
        Determinant(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_occupied(self, p: usize) -> bool {
        self.0 >> p & 1 == 1
    }

    pub fn particle_count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn count_spin(self, spin: Spin) -> usize {
        let mask = match spin {
            Spin::Up => 0x5555_5555u32,
            Spin::Down => 0xAAAA_AAAAu32,
        };
        (self.0 & mask).count_ones() as usize
    }

    /// Occupied orbitals in ascending order.
    pub fn orbitals(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&p| self.is_occupied(p))
    }

    /// Jordan–Wigner parity: `(-1)^(occupied orbitals below p)`.
    fn parity_below(self, p: usize) -> i32 {
        let below = self.0 & ((1u32 << p) - 1);
        if below.count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

impl fmt::Debug for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let occ: Vec<usize> = self.orbitals().collect();
        write!(f, "Det{occ:?}")
    }
}

/// A single ladder operator in an operator string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

pub fn apply_annihilation(det: Determinant, p: usize) -> Option<(Determinant, i32)> {
    assert!(p < 2 * MAX_SITES, "orbital {p} out of range");
    if !det.is_occupied(p) {
        return None;
    }
    Some((Determinant(det.0 & !(1 << p)), det.parity_below(p)))
}

pub fn apply_creation(det: Determinant, p: usize) -> Option<(Determinant, i32)> {
    assert!(p < 2 * MAX_SITES, "orbital {p} out of range");
    if det.is_occupied(p) {
        return None;
    }
    Some((Determinant(det.0 | (1 << p)), det.parity_below(p)))
}

/// Applies an operator string written left to right (as in `a†_p a†_q a_s a_r`);
/// the rightmost operator acts first.
pub fn apply_excitation_string(det: Determinant, ops: &[Ladder]) -> Option<(Determinant, i32)> {
    ops.iter().rev().try_fold((det, 1), |(d, sign), op| {
        let (next, s) = match *op {
            Ladder::Create(p) => apply_creation(d, p)?,
            Ladder::Annihilate(p) => apply_annihilation(d, p)?,
        };
        Some((next, sign * s))
    })
}

/// Determinants of a fixed `(n_up, n_dn)` sector in ascending bitmask order.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_sites: usize,
    n_up: usize,
    n_dn: usize,
    dets: Vec<Determinant>,
    index_of: HashMap<Determinant, usize>,
}

impl SectorBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_orbitals(&self) -> usize {
        2 * self.n_sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_dn(&self) -> usize {
        self.n_dn
    }

    pub fn n_particles(&self) -> usize {
        self.n_up + self.n_dn
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn dets(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn det(&self, i: usize) -> Determinant {
        self.dets[i]
    }

    pub fn index_of(&self, det: Determinant) -> Option<usize> {
        self.index_of.get(&det).copied()
    }
}

/// All `k`-subsets of `0..n` as bitmasks.
fn combinations(n: usize, k: usize) -> Vec<u32> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .collect()
}

/// Spread site-occupation bits onto one spin channel of the flat index.
fn interleave(sites: u32, spin: Spin) -> u32 {
    (0..MAX_SITES)
        .filter(|&i| sites >> i & 1 == 1)
        .fold(0, |acc, i| acc | 1 << (2 * i + spin.offset()))
}

pub fn enumerate_sector(n_sites: usize, n_up: usize, n_dn: usize) -> Result<SectorBasis> {
    if n_sites > MAX_SITES {
        return Err(Error::TooManySites {
            n_sites,
            max: MAX_SITES,
        });
    }
    if n_up > n_sites || n_dn > n_sites {
        return Err(Error::InvalidSector {
            n_sites,
            n_up,
            n_dn,
        });
    }
    let ups = combinations(n_sites, n_up);
    let dns = combinations(n_sites, n_dn);
    let mut dets: Vec<Determinant> = ups
        .iter()
        .flat_map(|&u| {
            dns.iter()
                .map(move |&d| Determinant(interleave(u, Spin::Up) | interleave(d, Spin::Down)))
        })
        .collect();
    dets.sort_unstable();
    let index_of = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    Ok(SectorBasis {
        n_sites,
        n_up,
        n_dn,
        dets,
        index_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Ladder::*;

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Sign of an operator string by explicit reordering: the state is kept as
    /// an ordered list of created orbitals and every ladder operator is moved
    /// to the front by counting the transpositions it passes.
    fn sign_by_reordering(occupied: &[usize], ops: &[Ladder]) -> Option<(Vec<usize>, i32)> {
        let mut list = occupied.to_vec();
        let mut sign = 1;
        for op in ops.iter().rev() {
            match *op {
                Create(p) => {
                    if list.contains(&p) {
                        return None;
                    }
                    list.insert(0, p);
                }
                Annihilate(p) => {
                    let pos = list.iter().position(|&x| x == p)?;
                    if pos % 2 == 1 {
                        sign = -sign;
                    }
                    list.remove(pos);
                }
            }
        }
        // bubble sort to canonical ascending order, counting swaps
        for i in 0..list.len() {
            for j in 0..list.len() - 1 - i {
                if list[j] > list[j + 1] {
                    list.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        Some((list, sign))
    }

    #[test]
    fn sector_examples() {
        let b = enumerate_sector(1, 1, 0).unwrap();
        assert_eq!(b.dets(), &[Determinant::from_bits(1)]);
        assert_eq!(enumerate_sector(3, 2, 1).unwrap().dim(), 9);
        let full = enumerate_sector(3, 3, 3).unwrap();
        assert_eq!(full.dets(), &[Determinant::from_bits(0b11_1111)]);
    }

    #[test]
    fn sector_counts_match_binomials() {
        for l in 0..=6 {
            for nu in 0..=l {
                for nd in 0..=l {
                    let b = enumerate_sector(l, nu, nd).unwrap();
                    assert_eq!(b.dim(), binom(l, nu) * binom(l, nd));
                    assert!(b.dets().windows(2).all(|w| w[0] < w[1]));
                    for (i, d) in b.dets().iter().enumerate() {
                        assert_eq!(d.count_spin(Spin::Up), nu);
                        assert_eq!(d.count_spin(Spin::Down), nd);
                        assert_eq!(b.index_of(*d), Some(i));
                    }
                }
            }
        }
    }

    #[test]
    fn sector_rejects_bad_input() {
        assert!(matches!(
            enumerate_sector(17, 1, 1),
            Err(Error::TooManySites { .. })
        ));
        assert!(matches!(
            enumerate_sector(2, 3, 0),
            Err(Error::InvalidSector { .. })
        ));
    }

    #[test]
    fn flat_index_is_bijective() {
        for p in 0..8 {
            assert_eq!(SpinOrbital::from_index(p).index(), p);
        }
        assert_eq!(SpinOrbital::new(2, Spin::Down).index(), 5);
    }

    #[test]
    fn annihilation_examples() {
        let d01 = Determinant::from_orbitals(&[0, 1]);
        assert_eq!(
            apply_annihilation(d01, 0),
            Some((Determinant::from_orbitals(&[1]), 1))
        );
        assert_eq!(
            apply_annihilation(d01, 1),
            Some((Determinant::from_orbitals(&[0]), -1))
        );
        // oracle: explicit reordering of a_5 a†_0 a†_2 a†_5 |vac>
        let (occ, s) = sign_by_reordering(&[0, 2, 5], &[Annihilate(5)]).unwrap();
        assert_eq!((occ.as_slice(), s), (&[0usize, 2][..], 1));
        assert_eq!(
            apply_annihilation(Determinant::from_orbitals(&[0, 2, 5]), 5),
            Some((Determinant::from_orbitals(&[0, 2]), 1))
        );
    }

    #[test]
    fn creation_examples() {
        assert_eq!(
            apply_creation(Determinant::VACUUM, 3),
            Some((Determinant::from_orbitals(&[3]), 1))
        );
        assert_eq!(apply_creation(Determinant::from_orbitals(&[3]), 3), None);
        let (occ, s) = sign_by_reordering(&[1, 4], &[Create(2)]).unwrap();
        assert_eq!((occ.as_slice(), s), (&[1usize, 2, 4][..], -1));
        assert_eq!(
            apply_creation(Determinant::from_orbitals(&[1, 4]), 2),
            Some((Determinant::from_orbitals(&[1, 2, 4]), -1))
        );
    }

    #[test]
    fn excitation_string_examples() {
        assert_eq!(
            apply_excitation_string(Determinant::VACUUM, &[Create(0), Create(1)]),
            Some((Determinant::from_orbitals(&[0, 1]), 1))
        );
        let d01 = Determinant::from_orbitals(&[0, 1]);
        assert_eq!(
            apply_excitation_string(d01, &[Create(0), Create(1), Annihilate(1), Annihilate(0)]),
            Some((d01, 1))
        );
        let ops = [Create(1), Create(2), Annihilate(2), Annihilate(0)];
        // oracle value recorded from the reordering count
        let (occ, s) = sign_by_reordering(&[0, 2], &ops).unwrap();
        assert_eq!((occ.as_slice(), s), (&[1usize, 2][..], 1));
        assert_eq!(
            apply_excitation_string(Determinant::from_orbitals(&[0, 2]), &ops),
            Some((Determinant::from_orbitals(&[1, 2]), 1))
        );
    }

    fn det_and_ops() -> impl Strategy<Value = (u32, Vec<Ladder>)> {
        let op =
            (any::<bool>(), 0usize..6).prop_map(|(c, p)| if c { Create(p) } else { Annihilate(p) });
        (0u32..64, proptest::collection::vec(op, 0..6))
    }

    proptest! {
        #[test]
        fn strings_agree_with_reordering_oracle((bits, ops) in det_and_ops()) {
            let det = Determinant::from_bits(bits);
            let occ: Vec<usize> = det.orbitals().collect();
            let expected = sign_by_reordering(&occ, &ops)
                .map(|(o, s)| (Determinant::from_orbitals(&o), s));
            prop_assert_eq!(apply_excitation_string(det, &ops), expected);
        }

        #[test]
        fn anticommutation_of_annihilators(bits in 0u32..64, p in 0usize..6, q in 0usize..6) {
            prop_assume!(p != q);
            let det = Determinant::from_bits(bits);
            let pq = apply_excitation_string(det, &[Annihilate(p), Annihilate(q)]);
            let qp = apply_excitation_string(det, &[Annihilate(q), Annihilate(p)]);
            match (pq, qp) {
                (Some((d1, s1)), Some((d2, s2))) => {
                    prop_assert_eq!(d1, d2);
                    prop_assert_eq!(s1, -s2);
                }
                (None, None) => {}
                _ => prop_assert!(false, "paths disagree on vanishing"),
            }
        }
    }
}
