//! Inhomogeneous Fermi–Hubbard model, its two-particle reduced form and the
//! critical subset of pair-space positions the reduced form touches.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_excitation_string, Ladder, SectorBasis, MAX_SITES};
use crate::linalg::{hermitian_deviation, hermitian_eigen, symmetric_eigen, CMatrix, CVector};

const SUBSET_HEADER: &str = "subset v1";

/// Default threshold separating structural zeros from round-off.
pub const NONZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardParams {
    #[serde(rename = "L")]
    pub n_sites: usize,
    /// Hopping amplitude; the kinetic term is `-t Σ (a†_i a_j + h.c.)`.
    #[serde(rename = "t")]
    pub hopping: f64,
    #[serde(rename = "U")]
    pub interaction: f64,
    /// On-site energies in flat spin-orbital order, length `2L`.
    #[serde(rename = "eps")]
    pub onsite: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
}

impl HubbardParams {
    /// Three-site open chain used throughout the experiments.
    ///
    /// The up-spin energies on the two edge sites are zero and every other
    /// spin-orbital carries a distinct offset; this places the model in the
    /// class whose reduced Hamiltonian has 184 site-basis and 27 eigenbasis
    /// critical positions.
    pub fn reference() -> Self {
        Self {
            n_sites: 3,
            hopping: 1.0,
            interaction: 4.0,
            onsite: vec![0.00, 0.30, -0.20, 0.15, 0.00, 0.10],
            periodic: false,
        }
    }

    pub fn n_orbitals(&self) -> usize {
        2 * self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "L must be in 1..={MAX_SITES}, got {}",
                self.n_sites
            )));
        }
        if self.onsite.len() != self.n_orbitals() {
            return Err(Error::InvalidParams(format!(
                "eps must have 2L = {} entries, got {}",
                self.n_orbitals(),
                self.onsite.len()
            )));
        }
        let all = [self.hopping, self.interaction]
            .into_iter()
            .chain(self.onsite.iter().copied());
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.interaction < 0.0 {
            return Err(Error::InvalidParams(format!(
                "U must be non-negative, got {}",
                self.interaction
            )));
        }
        Ok(())
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<(usize, usize)> = (0..self.n_sites.saturating_sub(1))
            .map(|i| (i, i + 1))
            .collect();
        if self.periodic && self.n_sites > 2 {
            bonds.push((self.n_sites - 1, 0));
        }
        bonds
    }

    /// One-body matrix `h_pq` (hopping plus on-site energies).
    pub fn one_body(&self) -> DMatrix<f64> {
        let m = self.n_orbitals();
        let mut h = DMatrix::zeros(m, m);
        for (i, j) in self.bonds() {
            for s in 0..2 {
                let (p, q) = (2 * i + s, 2 * j + s);
                h[(p, q)] -= self.hopping;
                h[(q, p)] -= self.hopping;
            }
        }
        for (p, &e) in self.onsite.iter().enumerate() {
            h[(p, p)] += e;
        }
        h
    }

    /// Second-quantized terms of the Hamiltonian as (coefficient, operator string).
    pub fn terms(&self) -> Vec<(f64, Vec<Ladder>)> {
        use Ladder::*;
        let h = self.one_body();
        let m = self.n_orbitals();
        let mut terms = Vec::new();
        for p in 0..m {
            for q in 0..m {
                if h[(p, q)] != 0.0 {
                    terms.push((h[(p, q)], vec![Create(p), Annihilate(q)]));
                }
            }
        }
        if self.interaction != 0.0 {
            for i in 0..self.n_sites {
                let (up, dn) = (2 * i, 2 * i + 1);
                terms.push((
                    self.interaction,
                    vec![Create(up), Create(dn), Annihilate(dn), Annihilate(up)],
                ));
            }
        }
        terms
    }
}

pub fn build_hubbard(params: &HubbardParams, basis: &SectorBasis) -> Result<CMatrix> {
    params.validate()?;
    if params.n_sites != basis.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: params.n_sites,
            found: basis.n_sites(),
        });
    }
    let terms = params.terms();
    let n = basis.dim();
    let mut h = CMatrix::zeros(n, n);
    for (j, &det) in basis.dets().iter().enumerate() {
        for (coeff, ops) in &terms {
            if let Some((out, sign)) = apply_excitation_string(det, ops) {
                let i = basis
                    .index_of(out)
                    .expect("Hubbard terms conserve both spin populations");
                h[(i, j)] += Complex64::new(coeff * f64::from(sign), 0.0);
            }
        }
    }
    Ok(h)
}

/// Ordered pairs `(p, q)` of distinct spin-orbitals, linearized row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSpace {
    n_orbitals: usize,
}

impl PairSpace {
    pub fn new(n_orbitals: usize) -> Self {
        Self { n_orbitals }
    }

    pub fn for_sites(n_sites: usize) -> Self {
        Self::new(2 * n_sites)
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn dim(&self) -> usize {
        self.n_orbitals * self.n_orbitals.saturating_sub(1)
    }

    pub fn index(&self, p: usize, q: usize) -> Option<usize> {
        if p == q || p >= self.n_orbitals || q >= self.n_orbitals {
            return None;
        }
        Some(p * (self.n_orbitals - 1) + if q > p { q - 1 } else { q })
    }

    pub fn pair(&self, i: usize) -> (usize, usize) {
        let stride = self.n_orbitals - 1;
        let p = i / stride;
        let r = i % stride;
        (p, if r >= p { r + 1 } else { r })
    }

    /// Index of `(q, p)` for the pair at `i`.
    pub fn swapped(&self, i: usize) -> usize {
        let (p, q) = self.pair(i);
        self.index(q, p).expect("swapped pair is valid")
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim()).map(|i| self.pair(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTag {
    #[serde(rename = "site")]
    Site,
    #[serde(rename = "pair-eigenbasis")]
    PairEigen,
}

impl BasisTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisTag::Site => "site",
            BasisTag::PairEigen => "pair-eigenbasis",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "site" => Ok(BasisTag::Site),
            "pair-eigenbasis" => Ok(BasisTag::PairEigen),
            other => Err(Error::Parse(format!("unknown basis tag {other:?}"))),
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// Pair-space coefficients `²H_{pq;rs}` whose full contraction with a 2-RDM
/// gives the energy.
///
/// The stored (folded) form places the one-body term `h_pq a†_p a_q` on the
/// positions `(p r; q r)` with weight `1/(N-1)` and the on-site interaction on
/// `(i↑ i↓; i↑ i↓)`. It is real symmetric but not swap-antisymmetric;
/// [`TwoBodyReducedHamiltonian::antisymmetrized`] gives the projected form,
/// which has the same contraction with every 2-RDM.
#[derive(Debug, Clone)]
pub struct TwoBodyReducedHamiltonian {
    basis: BasisTag,
    space: PairSpace,
    n_particles: usize,
    coeffs: DMatrix<f64>,
}

impl TwoBodyReducedHamiltonian {
    pub fn from_parts(
        basis: BasisTag,
        space: PairSpace,
        n_particles: usize,
        coeffs: DMatrix<f64>,
    ) -> Result<Self> {
        if coeffs.nrows() != space.dim() || coeffs.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: coeffs.nrows(),
            });
        }
        Ok(Self {
            basis,
            space,
            n_particles,
            coeffs,
        })
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn space(&self) -> PairSpace {
        self.space
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// `¼ (H_{pq;rs} - H_{qp;rs} - H_{pq;sr} + H_{qp;sr})`; site basis only.
    pub fn antisymmetrized(&self) -> Self {
        assert_eq!(
            self.basis,
            BasisTag::Site,
            "swap symmetry is a site-basis notion"
        );
        let d = self.space.dim();
        let sw: Vec<usize> = (0..d).map(|i| self.space.swapped(i)).collect();
        let c = &self.coeffs;
        let anti = DMatrix::from_fn(d, d, |a, b| {
            0.25 * (c[(a, b)] - c[(sw[a], b)] - c[(a, sw[b])] + c[(sw[a], sw[b])])
        });
        Self {
            coeffs: anti,
            ..self.clone()
        }
    }

    /// Hilbert–Schmidt norm of the coefficients restricted to `subset`.
    pub fn subset_norm(&self, subset: &CriticalSubset) -> f64 {
        subset
            .iter()
            .map(|(a, b)| self.coeffs[(a, b)].powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn reduce_to_two_body(
    params: &HubbardParams,
    n_particles: usize,
) -> Result<TwoBodyReducedHamiltonian> {
    params.validate()?;
    if n_particles < 2 {
        return Err(Error::TooFewParticles(n_particles));
    }
    let space = PairSpace::for_sites(params.n_sites);
    let m = params.n_orbitals();
    let h = params.one_body();
    let weight = 1.0 / (n_particles as f64 - 1.0);
    let mut coeffs = DMatrix::zeros(space.dim(), space.dim());
    // a†_p a_q = 1/(N-1) Σ_r a†_p a†_r a_r a_q on N-particle states
    for p in 0..m {
        for q in 0..m {
            if h[(p, q)] == 0.0 {
                continue;
            }
            for r in (0..m).filter(|&r| r != p && r != q) {
                let a = space.index(p, r).unwrap();
                let b = space.index(q, r).unwrap();
                coeffs[(a, b)] += h[(p, q)] * weight;
            }
        }
    }
    for i in 0..params.n_sites {
        let a = space.index(2 * i, 2 * i + 1).unwrap();
        coeffs[(a, a)] += params.interaction;
    }
    TwoBodyReducedHamiltonian::from_parts(BasisTag::Site, space, n_particles, coeffs)
}

/// Pair-space positions of the 2-RDM singled out by the non-zero reduced
/// Hamiltonian coefficients, closed under Hermitian conjugation and (in the
/// site basis) under swaps within either pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalSubset {
    basis: BasisTag,
    space: PairSpace,
    mask: Vec<bool>,
    members: Vec<(usize, usize)>,
}

impl CriticalSubset {
    /// Builds the symmetry closure of `positions`.
    pub fn from_positions(
        basis: BasisTag,
        space: PairSpace,
        positions: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let d = space.dim();
        let mut set = BTreeSet::new();
        for (a, b) in positions {
            if a >= d || b >= d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: a.max(b) + 1,
                });
            }
            let rows = match basis {
                BasisTag::Site => vec![
                    (a, b),
                    (space.swapped(a), b),
                    (a, space.swapped(b)),
                    (space.swapped(a), space.swapped(b)),
                ],
                BasisTag::PairEigen => vec![(a, b)],
            };
            for (x, y) in rows {
                set.insert((x, y));
                set.insert((y, x));
            }
        }
        let mut mask = vec![false; d * d];
        for &(a, b) in &set {
            mask[a * d + b] = true;
        }
        Ok(Self {
            basis,
            space,
            mask,
            members: set.into_iter().collect(),
        })
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn space(&self) -> PairSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let d = self.space.dim();
        a < d && b < d && self.mask[a * d + b]
    }

    /// Members in ascending `(row, col)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().copied()
    }

    /// Text form: header lines, then one `row col` member per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SUBSET_HEADER}")?;
        writeln!(w, "basis {}", self.basis)?;
        writeln!(w, "sites {}", self.space.n_orbitals() / 2)?;
        writeln!(w, "count {}", self.len())?;
        for (a, b) in self.iter() {
            writeln!(w, "{a} {b}")?;
        }
        Ok(())
    }

    /// Rejects files whose member list, header count and symmetry closure disagree.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let text: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
        let mut lines = text.iter().map(|l| l.trim()).filter(|l| !l.is_empty());
        if lines.next() != Some(SUBSET_HEADER) {
            return Err(Error::Parse("missing subset header".into()));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().unwrap_or("");
            line.strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("expected `{key}` line, found {line:?}")))
        };
        let basis = BasisTag::parse(&field("basis")?)?;
        let sites: usize = parse_field(&field("sites")?)?;
        let count: usize = parse_field(&field("count")?)?;
        let mut positions = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("bad subset line {line:?}")));
            };
            positions.push((parse_field(a)?, parse_field(b)?));
        }
        let subset = Self::from_positions(
            basis,
            PairSpace::for_sites(sites),
            positions.iter().copied(),
        )?;
        if positions.len() != count || subset.len() != count {
            return Err(Error::Parse(format!(
                "subset count mismatch: header {count}, listed {}, closure {}",
                positions.len(),
                subset.len()
            )));
        }
        Ok(subset)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("invalid number {s:?}")))
}

pub fn critical_subset(h2: &TwoBodyReducedHamiltonian, tol: f64) -> CriticalSubset {
    assert!(tol > 0.0, "tolerance must be positive");
    let c = h2.coeffs();
    let d = c.nrows();
    let positions = (0..d)
        .flat_map(|a| (0..d).map(move |b| (a, b)))
        .filter(|&(a, b)| c[(a, b)].abs() > tol);
    CriticalSubset::from_positions(h2.basis(), h2.space(), positions)
        .expect("positions come from a matrix of pair-space dimension")
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    pub state: CVector,
    /// `E1 - E0`; infinite for a one-dimensional sector.
    pub gap: f64,
    pub degenerate: bool,
    pub excited_energy: Option<f64>,
    pub excited_state: Option<CVector>,
}

pub fn ground_state(h: &CMatrix, degeneracy_tol: f64) -> Result<GroundStateResult> {
    let dev = hermitian_deviation(h);
    if dev > 1e-12 {
        return Err(Error::NotHermitian(dev));
    }
    if h.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let (values, vectors) = hermitian_eigen(h);
    let gap = values.get(1).map_or(f64::INFINITY, |e1| e1 - values[0]);
    Ok(GroundStateResult {
        energy: values[0],
        state: vectors.column(0).into_owned(),
        gap,
        degenerate: gap <= degeneracy_tol,
        excited_energy: values.get(1).copied(),
        excited_state: (values.len() > 1).then(|| vectors.column(1).into_owned()),
    })
}

/// Orthogonal eigenbasis of the (real) reduced Hamiltonian in pair space.
#[derive(Debug, Clone)]
pub struct PairEigenbasis {
    /// Columns are eigenvectors, in ascending eigenvalue order.
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
}

impl PairEigenbasis {
    /// `Vᵀ ²H V`, tagged as the pair eigenbasis.
    pub fn transform_hamiltonian(
        &self,
        h2: &TwoBodyReducedHamiltonian,
    ) -> Result<TwoBodyReducedHamiltonian> {
        let rotated = self.vectors.transpose() * h2.coeffs() * &self.vectors;
        TwoBodyReducedHamiltonian::from_parts(
            BasisTag::PairEigen,
            h2.space(),
            h2.n_particles(),
            rotated,
        )
    }
}

pub fn pair_eigenbasis(h2: &TwoBodyReducedHamiltonian) -> PairEigenbasis {
    let (values, vectors) = symmetric_eigen(h2.coeffs());
    PairEigenbasis { vectors, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_sector, Determinant};

    fn zero_params(n_sites: usize) -> HubbardParams {
        HubbardParams {
            n_sites,
            hopping: 0.0,
            interaction: 0.0,
            onsite: vec![0.0; 2 * n_sites],
            periodic: false,
        }
    }

    #[test]
    fn pair_linearization_round_trips() {
        let s = PairSpace::for_sites(3);
        assert_eq!(s.dim(), 30);
        for i in 0..s.dim() {
            let (p, q) = s.pair(i);
            assert_ne!(p, q);
            assert_eq!(s.index(p, q), Some(i));
            assert_eq!(s.swapped(s.swapped(i)), i);
        }
        assert_eq!(s.pair(0), (0, 1));
        assert_eq!(s.pair(5), (1, 0));
        assert_eq!(s.index(2, 2), None);
    }

    #[test]
    fn single_doubly_occupied_site() {
        let p = HubbardParams {
            interaction: 3.5,
            ..zero_params(1)
        };
        let b = enumerate_sector(1, 1, 1).unwrap();
        let h = build_hubbard(&p, &b).unwrap();
        assert_eq!(h.shape(), (1, 1));
        assert!((h[(0, 0)].re - 3.5).abs() < 1e-15);
    }

    #[test]
    fn single_particle_hop() {
        let p = HubbardParams {
            hopping: 1.0,
            interaction: 4.0,
            ..zero_params(2)
        };
        let b = enumerate_sector(2, 1, 0).unwrap();
        let h = build_hubbard(&p, &b).unwrap();
        let expected = [[0.0, -1.0], [-1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(h[(i, j)], Complex64::new(expected[i][j], 0.0));
            }
        }
        let gs = ground_state(&h, 1e-8).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!((gs.gap - 2.0).abs() < 1e-12);
        assert!(!gs.degenerate);
        assert!((crate::linalg::norm(&gs.state) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let b = enumerate_sector(2, 1, 0).unwrap();
        assert!(matches!(
            build_hubbard(&HubbardParams::reference(), &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hamiltonian_terms_conserve_spin_populations() {
        // full Fock space at L <= 3: every term maps (n_up, n_dn) to itself
        for l in 1..=3 {
            let mut p = HubbardParams::reference();
            p.n_sites = l;
            p.onsite = (0..2 * l).map(|i| 0.1 * i as f64).collect();
            for bits in 0u32..1 << (2 * l) {
                let det = Determinant::from_bits(bits);
                for (_, ops) in p.terms() {
                    if let Some((out, _)) = apply_excitation_string(det, &ops) {
                        assert_eq!(
                            out.count_spin(crate::fock::Spin::Up),
                            det.count_spin(crate::fock::Spin::Up)
                        );
                        assert_eq!(
                            out.count_spin(crate::fock::Spin::Down),
                            det.count_spin(crate::fock::Spin::Down)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn reference_sector_matrix_is_hermitian_with_gap() {
        let p = HubbardParams::reference();
        let b = enumerate_sector(3, 2, 1).unwrap();
        let h = build_hubbard(&p, &b).unwrap();
        assert_eq!(h.shape(), (9, 9));
        assert!(hermitian_deviation(&h) < 1e-15);
        let gs = ground_state(&h, 1e-8).unwrap();
        assert!(!gs.degenerate && gs.gap > 0.1);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            ground_state(&h, 1e-8),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn too_few_particles() {
        assert!(matches!(
            reduce_to_two_body(&HubbardParams::reference(), 1),
            Err(Error::TooFewParticles(1))
        ));
    }

    #[test]
    fn zero_hamiltonian_has_empty_subset() {
        let h2 = reduce_to_two_body(&zero_params(3), 3).unwrap();
        assert!(h2.coeffs().iter().all(|&x| x == 0.0));
        assert!(critical_subset(&h2, NONZERO_TOL).is_empty());
    }

    #[test]
    fn folded_and_antisymmetrized_forms_are_hermitian() {
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        let anti = h2.antisymmetrized();
        let s = h2.space();
        for form in [&h2, &anti] {
            let c = form.coeffs();
            assert!((c - c.transpose()).amax() < 1e-15);
        }
        let c = anti.coeffs();
        for a in 0..s.dim() {
            for b in 0..s.dim() {
                assert!((c[(a, b)] + c[(s.swapped(a), b)]).abs() < 1e-15);
                assert!((c[(a, b)] + c[(a, s.swapped(b))]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn subset_counts_for_reference_model() {
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        assert_eq!(critical_subset(&h2, NONZERO_TOL).len(), 184);
        assert_eq!(
            critical_subset(&h2.antisymmetrized(), NONZERO_TOL).len(),
            184
        );
        let eig = pair_eigenbasis(&h2);
        let diag = eig.transform_hamiltonian(&h2).unwrap();
        assert_eq!(critical_subset(&diag, NONZERO_TOL).len(), 27);
    }

    #[test]
    fn generic_onsite_energies_give_larger_subset() {
        // a fully generic choice touches every diagonal orbit
        let mut p = HubbardParams::reference();
        p.onsite = vec![0.00, 0.30, -0.20, 0.15, -0.25, 0.10];
        let h2 = reduce_to_two_body(&p, 3).unwrap();
        assert_eq!(critical_subset(&h2, NONZERO_TOL).len(), 188);
    }

    #[test]
    fn subset_is_monotone_in_tolerance() {
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        let mut prev = usize::MAX;
        for tol in [1e-12, 1e-3, 0.05, 0.1, 0.2, 1.0, 5.0] {
            let s = critical_subset(&h2, tol);
            assert!(s.len() <= prev);
            prev = s.len();
        }
    }

    #[test]
    fn subset_is_symmetry_closed() {
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        let s = critical_subset(&h2, NONZERO_TOL);
        let sp = s.space();
        for (a, b) in s.iter() {
            assert!(s.contains(b, a));
            assert!(s.contains(sp.swapped(a), b));
            assert!(s.contains(a, sp.swapped(b)));
        }
    }

    #[test]
    fn pair_eigenbasis_of_diagonal_is_permutation() {
        let space = PairSpace::new(3);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            3.0, -1.0, 0.5, 2.0, 7.0, -4.0,
        ]));
        let h2 = TwoBodyReducedHamiltonian::from_parts(BasisTag::Site, space, 2, diag).unwrap();
        let e = pair_eigenbasis(&h2);
        assert_eq!(e.values, vec![-4.0, -1.0, 0.5, 2.0, 3.0, 7.0]);
        for c in 0..6 {
            let col = e.vectors.column(c);
            assert_eq!(col.iter().filter(|x| x.abs() > 0.0).count(), 1);
            assert!(col.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }

    #[test]
    fn pair_eigenbasis_round_trip() {
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        let e = pair_eigenbasis(&h2);
        let d = e.transform_hamiltonian(&h2).unwrap();
        let off = d.coeffs() - DMatrix::from_diagonal(&d.coeffs().diagonal());
        assert!(off.amax() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let back = &e.vectors * d.coeffs() * e.vectors.transpose();
        assert!((back - h2.coeffs()).amax() < 1e-12);
    }

    #[test]
    fn subset_file_round_trip_and_recount() {
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        let subset = critical_subset(&h2, NONZERO_TOL);
        let mut buf = Vec::new();
        subset.write_to(&mut buf).unwrap();
        assert_eq!(CriticalSubset::read_from(buf.as_slice()).unwrap(), subset);

        let text = String::from_utf8(buf).unwrap();
        let wrong_count = text.replacen("count 184", "count 183", 1);
        assert!(CriticalSubset::read_from(wrong_count.as_bytes()).is_err());
        // dropping one member breaks the symmetry closure
        let truncated: String = text
            .lines()
            .take(text.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        let truncated = truncated.replacen("count 184", "count 183", 1);
        assert!(CriticalSubset::read_from(truncated.as_bytes()).is_err());
    }
}
