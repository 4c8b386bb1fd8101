//! Two-particle reduced density matrices `²Γ_{pq;rs} = ⟨a†_p a†_q a_s a_r⟩`
//! over ordered distinct pairs, plus the distances and diagnostics built on
//! them.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_excitation_string, spin_of, Ladder, SectorBasis, Spin};
use crate::hamiltonian::{
    BasisTag, CriticalSubset, PairEigenbasis, PairSpace, TwoBodyReducedHamiltonian,
};
use crate::linalg::{hermitian_deviation, norm, CMatrix, CVector};

const NORM_TOL: f64 = 1e-10;
const FORMAT_HEADER: &str = "rdm2 v1";
const PAIR_LINEARIZATION: &str = "ordered-distinct-row-major-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct TwoRDM {
    basis: BasisTag,
    n_sites: usize,
    n_particles: usize,
    elements: CMatrix,
}

impl TwoRDM {
    pub fn new(
        basis: BasisTag,
        n_sites: usize,
        n_particles: usize,
        elements: CMatrix,
    ) -> Result<Self> {
        let d = PairSpace::for_sites(n_sites).dim();
        if elements.nrows() != d || elements.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: elements.nrows(),
            });
        }
        Ok(Self {
            basis,
            n_sites,
            n_particles,
            elements,
        })
    }

    pub fn zeros(basis: BasisTag, n_sites: usize, n_particles: usize) -> Self {
        let d = PairSpace::for_sites(n_sites).dim();
        Self {
            basis,
            n_sites,
            n_particles,
            elements: CMatrix::zeros(d, d),
        }
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn space(&self) -> PairSpace {
        PairSpace::for_sites(self.n_sites)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.elements[(a, b)]
    }

    /// `Σ_{p≠q} Γ_{pq;pq}`, equal to `N(N-1)` for a physical 2-RDM.
    pub fn trace(&self) -> Complex64 {
        self.elements.trace()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.elements)
    }

    /// Largest violation of `Γ_{pq;rs} = -Γ_{qp;rs} = -Γ_{pq;sr}`.
    pub fn antisymmetry_deviation(&self) -> f64 {
        let s = self.space();
        let d = self.dim();
        let g = &self.elements;
        let mut dev = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                dev = dev
                    .max((g[(a, b)] + g[(s.swapped(a), b)]).norm())
                    .max((g[(a, b)] + g[(a, s.swapped(b))]).norm());
            }
        }
        dev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = crate::linalg::hermitian_eigen(&self.elements);
        vals.first().copied().unwrap_or(0.0)
    }

    pub fn count_nonzero(&self, tol: f64) -> usize {
        self.elements.iter().filter(|z| z.norm() > tol).count()
    }

    /// One-particle RDM `γ_pq = Σ_r Γ_{pr;qr} / (N-1)`; site basis only.
    pub fn one_rdm(&self) -> CMatrix {
        assert_eq!(self.basis, BasisTag::Site);
        let s = self.space();
        let m = s.n_orbitals();
        let w = 1.0 / (self.n_particles as f64 - 1.0);
        CMatrix::from_fn(m, m, |p, q| {
            (0..m)
                .filter(|&r| r != p && r != q)
                .map(|r| self.elements[(s.index(p, r).unwrap(), s.index(q, r).unwrap())])
                .sum::<Complex64>()
                * w
        })
    }

    /// `Vᵀ Γ V` for the pair eigenbasis `V`.
    pub fn rotated(&self, eig: &PairEigenbasis) -> Result<TwoRDM> {
        if self.basis != BasisTag::Site {
            return Err(Error::BasisMismatch {
                left: self.basis.to_string(),
                right: BasisTag::Site.to_string(),
            });
        }
        let v = crate::linalg::to_complex(&eig.vectors);
        if v.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.nrows(),
            });
        }
        Ok(Self {
            basis: BasisTag::PairEigen,
            elements: v.transpose() * &self.elements * v,
            ..self.clone()
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FORMAT_HEADER}")?;
        writeln!(w, "basis {}", self.basis)?;
        writeln!(w, "sites {}", self.n_sites)?;
        writeln!(w, "particles {}", self.n_particles)?;
        writeln!(w, "pairs {PAIR_LINEARIZATION}")?;
        writeln!(w, "dim {}", self.dim())?;
        for z in self.elements.transpose().iter() {
            // shortest round-trip representation keeps the file bit-exact
            writeln!(w, "{:e} {:e}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of rdm file".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != FORMAT_HEADER {
            return Err(Error::Parse("missing rdm2 header".into()));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = next()?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| Error::Parse(format!("expected `{key}` line, found {line:?}")))
        };
        let basis = BasisTag::parse(&field("basis")?)?;
        let n_sites = parse_num::<usize>(&field("sites")?)?;
        let n_particles = parse_num::<usize>(&field("particles")?)?;
        let pairs = field("pairs")?;
        if pairs != PAIR_LINEARIZATION {
            return Err(Error::Parse(format!(
                "unsupported pair linearization {pairs:?}"
            )));
        }
        let dim = parse_num::<usize>(&field("dim")?)?;
        let expected = PairSpace::for_sites(n_sites).dim();
        if dim != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: dim,
            });
        }
        let mut values = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            let line = next()?;
            let mut it = line.split_whitespace();
            let re = parse_num::<f64>(it.next().unwrap_or(""))?;
            let im = parse_num::<f64>(it.next().unwrap_or(""))?;
            values.push(Complex64::new(re, im));
        }
        Self::new(
            basis,
            n_sites,
            n_particles,
            CMatrix::from_row_slice(dim, dim, &values),
        )
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("invalid number {s:?}")))
}

/// Precomputed pair-annihilation tables for one sector.
///
/// Column `(p, q)` of the amplitude matrix holds `a_q a_p |ψ⟩` expanded over
/// `(N-2)`-particle determinants, so that `Γ = Φ† Φ`.
#[derive(Debug, Clone)]
pub struct RdmKernel {
    n_sites: usize,
    n_particles: usize,
    n_dets: usize,
    n_reduced: usize,
    /// Per pair index: (ket determinant, reduced determinant, sign).
    transitions: Vec<Vec<(usize, usize, f64)>>,
    transform: Option<CMatrix>,
}

impl RdmKernel {
    pub fn new(basis: &SectorBasis) -> Self {
        let space = PairSpace::for_sites(basis.n_sites());
        let mut reduced: HashMap<crate::fock::Determinant, usize> = HashMap::new();
        let mut transitions = vec![Vec::new(); space.dim()];
        for (a, (p, q)) in space.pairs().enumerate() {
            for (j, &det) in basis.dets().iter().enumerate() {
                let ops = [Ladder::Annihilate(q), Ladder::Annihilate(p)];
                if let Some((out, sign)) = apply_excitation_string(det, &ops) {
                    let len = reduced.len();
                    let k = *reduced.entry(out).or_insert(len);
                    transitions[a].push((j, k, f64::from(sign)));
                }
            }
        }
        Self {
            n_sites: basis.n_sites(),
            n_particles: basis.n_particles(),
            n_dets: basis.dim(),
            n_reduced: reduced.len(),
            transitions,
            transform: None,
        }
    }

    /// Kernel producing 2-RDMs directly in the pair eigenbasis.
    pub fn in_eigenbasis(mut self, eig: &PairEigenbasis) -> Self {
        self.transform = Some(crate::linalg::to_complex(&eig.vectors));
        self
    }

    pub fn basis_tag(&self) -> BasisTag {
        if self.transform.is_some() {
            BasisTag::PairEigen
        } else {
            BasisTag::Site
        }
    }

    pub fn n_dets(&self) -> usize {
        self.n_dets
    }

    pub fn amplitudes(&self, psi: &CVector) -> CMatrix {
        let mut phi = CMatrix::zeros(self.n_reduced, self.transitions.len());
        for (a, col) in self.transitions.iter().enumerate() {
            for &(j, k, s) in col {
                phi[(k, a)] += psi[j] * s;
            }
        }
        match &self.transform {
            Some(v) => phi * v,
            None => phi,
        }
    }

    /// 2-RDM of `psi` with no normalization check.
    pub fn rdm_unchecked(&self, psi: &CVector) -> TwoRDM {
        let phi = self.amplitudes(psi);
        TwoRDM {
            basis: self.basis_tag(),
            n_sites: self.n_sites,
            n_particles: self.n_particles,
            elements: phi.adjoint() * &phi,
        }
    }

    pub fn rdm(&self, psi: &CVector) -> Result<TwoRDM> {
        self.check_state(psi)?;
        Ok(self.rdm_unchecked(psi))
    }

    /// Values of `Γ(ψ)` at the listed positions only.
    pub fn values_at(&self, phi: &CMatrix, positions: &[(usize, usize)]) -> Vec<Complex64> {
        positions
            .iter()
            .map(|&(a, b)| phi.column(a).dotc(&phi.column(b)))
            .collect()
    }

    fn check_state(&self, psi: &CVector) -> Result<()> {
        if psi.len() != self.n_dets {
            return Err(Error::DimensionMismatch {
                expected: self.n_dets,
                found: psi.len(),
            });
        }
        let n = norm(psi);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    fn density_rdm(&self, rho: &CMatrix) -> CMatrix {
        let dense: Vec<DMatrix<f64>> = self
            .transitions
            .iter()
            .map(|col| {
                let mut m = DMatrix::zeros(self.n_reduced, self.n_dets);
                for &(j, k, s) in col {
                    m[(k, j)] += s;
                }
                m
            })
            .collect();
        let d = dense.len();
        let weighted: Vec<CMatrix> = dense
            .iter()
            .map(|a| crate::linalg::to_complex(a) * rho)
            .collect();
        // Γ_ab = Σ_{k,j'} A_a[k,j'] (A_b ρ)[k,j']
        let mut g = CMatrix::from_fn(d, d, |a, b| {
            dense[a]
                .iter()
                .zip(weighted[b].iter())
                .map(|(&x, &y)| y * x)
                .sum()
        });
        if let Some(v) = &self.transform {
            g = v.transpose() * g * v;
        }
        g
    }
}

pub fn two_rdm_from_state(psi: &CVector, basis: &SectorBasis) -> Result<TwoRDM> {
    RdmKernel::new(basis).rdm(psi)
}

pub fn two_rdm_from_density_matrix(rho: &CMatrix, basis: &SectorBasis) -> Result<TwoRDM> {
    if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.nrows(),
        });
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > NORM_TOL {
        return Err(Error::BadTrace(tr.re));
    }
    let kernel = RdmKernel::new(basis);
    Ok(TwoRDM {
        basis: BasisTag::Site,
        n_sites: basis.n_sites(),
        n_particles: basis.n_particles(),
        elements: kernel.density_rdm(rho),
    })
}

fn check_compatible(
    left: BasisTag,
    right: BasisTag,
    left_dim: usize,
    right_dim: usize,
) -> Result<()> {
    if left != right {
        return Err(Error::BasisMismatch {
            left: left.to_string(),
            right: right.to_string(),
        });
    }
    if left_dim != right_dim {
        return Err(Error::DimensionMismatch {
            expected: left_dim,
            found: right_dim,
        });
    }
    Ok(())
}

fn real_energy(sum: Complex64) -> Result<f64> {
    if sum.im.abs() > 1e-10 {
        return Err(Error::ComplexEnergy(sum.im));
    }
    Ok(sum.re)
}

/// Full contraction `Σ ²H_{pq;rs} ²Γ_{pq;rs}`.
pub fn energy_from_rdm(h2: &TwoBodyReducedHamiltonian, gamma: &TwoRDM) -> Result<f64> {
    check_compatible(h2.basis(), gamma.basis, h2.space().dim(), gamma.dim())?;
    let sum = h2
        .coeffs()
        .iter()
        .zip(gamma.elements.iter())
        .map(|(&h, &g)| g * h)
        .sum();
    real_energy(sum)
}

/// Contraction restricted to the positions of `subset`.
pub fn energy_on_subset(
    h2: &TwoBodyReducedHamiltonian,
    gamma: &TwoRDM,
    subset: &CriticalSubset,
) -> Result<f64> {
    check_compatible(h2.basis(), gamma.basis, h2.space().dim(), gamma.dim())?;
    check_compatible(
        subset.basis(),
        gamma.basis,
        subset.space().dim(),
        gamma.dim(),
    )?;
    let sum = subset
        .iter()
        .map(|(a, b)| gamma.elements[(a, b)] * h2.coeffs()[(a, b)])
        .sum();
    real_energy(sum)
}

/// Squared Hilbert–Schmidt distance, optionally restricted to `subset`.
pub fn hs_distance_squared(a: &TwoRDM, b: &TwoRDM, subset: Option<&CriticalSubset>) -> Result<f64> {
    check_compatible(a.basis, b.basis, a.dim(), b.dim())?;
    match subset {
        Some(s) => {
            check_compatible(s.basis(), a.basis, s.space().dim(), a.dim())?;
            Ok(s.iter()
                .map(|(i, j)| (a.elements[(i, j)] - b.elements[(i, j)]).norm_sqr())
                .sum())
        }
        None => Ok((&a.elements - &b.elements).norm_squared()),
    }
}

/// Hilbert–Schmidt (Frobenius) distance, optionally restricted to `subset`.
pub fn hs_distance(a: &TwoRDM, b: &TwoRDM, subset: Option<&CriticalSubset>) -> Result<f64> {
    hs_distance_squared(a, b, subset).map(f64::sqrt)
}

/// `1 - |⟨ψ|φ⟩|²` for normalized pure states.
pub fn infidelity(psi: &CVector, target: &CVector) -> Result<f64> {
    if psi.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            found: psi.len(),
        });
    }
    for v in [psi, target] {
        let n = norm(v);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
    }
    Ok((1.0 - psi.dotc(target).norm_sqr()).clamp(0.0, 1.0))
}

/// How the uniform noise matrix is made to respect the RDM symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSymmetry {
    /// Independent draw for every element.
    None,
    /// Independent draws averaged onto the Hermitian, pair-antisymmetric class.
    Project,
    /// One draw per symmetry orbit, copied with the orbit's signs, so every
    /// element is still uniform on `[-1, 1]`.
    #[default]
    Orbit,
}

impl NoiseSymmetry {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseSymmetry::None => "none",
            NoiseSymmetry::Project => "project",
            NoiseSymmetry::Orbit => "orbit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub symmetrize: NoiseSymmetry,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            seed,
            symmetrize: NoiseSymmetry::default(),
        }
    }

    pub fn with_symmetry(self, symmetrize: NoiseSymmetry) -> Self {
        Self { symmetrize, ..self }
    }
}

/// Signed images of `(a, b)` under pair swaps (site basis only) and transposition.
fn orbit(space: &PairSpace, pair_swaps: bool, a: usize, b: usize) -> Vec<(usize, usize, f64)> {
    let mut out = vec![(a, b, 1.0), (b, a, 1.0)];
    if pair_swaps {
        let (sa, sb) = (space.swapped(a), space.swapped(b));
        for (x, y, sign) in [(sa, b, -1.0), (a, sb, -1.0), (sa, sb, 1.0)] {
            out.push((x, y, sign));
            out.push((y, x, sign));
        }
    }
    out
}

/// `Γ + εR` with `R_ij ~ U[-1, 1]` drawn row-major from a seeded stream.
///
/// The result is intentionally not required to be positive semidefinite or
/// trace-normalized.
pub fn add_noise(gamma: &TwoRDM, spec: &NoiseSpec) -> TwoRDM {
    assert!(spec.epsilon >= 0.0, "noise strength must be non-negative");
    if spec.epsilon == 0.0 {
        return gamma.clone();
    }
    let d = gamma.dim();
    let space = gamma.space();
    let pair_swaps = gamma.basis == BasisTag::Site;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let r = match spec.symmetrize {
        NoiseSymmetry::None | NoiseSymmetry::Project => {
            let mut r = DMatrix::<f64>::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    r[(a, b)] = rng.random_range(-1.0..=1.0);
                }
            }
            if spec.symmetrize == NoiseSymmetry::Project {
                if pair_swaps {
                    let sw: Vec<usize> = (0..d).map(|i| space.swapped(i)).collect();
                    r = DMatrix::from_fn(d, d, |a, b| {
                        0.25 * (r[(a, b)] - r[(sw[a], b)] - r[(a, sw[b])] + r[(sw[a], sw[b])])
                    });
                }
                r = (&r + r.transpose()) * 0.5;
            }
            r
        }
        NoiseSymmetry::Orbit => {
            let mut r = DMatrix::<f64>::from_element(d, d, f64::NAN);
            for a in 0..d {
                for b in 0..d {
                    if r[(a, b)].is_nan() {
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        for (x, y, sign) in orbit(&space, pair_swaps, a, b) {
                            r[(x, y)] = sign * u;
                        }
                    }
                }
            }
            r
        }
    };
    TwoRDM {
        elements: &gamma.elements
            + crate::linalg::to_complex(&r) * Complex64::new(spec.epsilon, 0.0),
        ..gamma.clone()
    }
}

fn spin_content(p: usize, q: usize) -> (usize, usize) {
    [p, q].iter().fold((0, 0), |(u, d), &x| match spin_of(x) {
        Spin::Up => (u + 1, d),
        Spin::Down => (u, d + 1),
    })
}

/// Site-basis positions that vanish for every state of the `(n_up, n_dn)`
/// sector: the two pairs carry different spin content, or a pair needs more
/// particles of one spin than the sector holds.
pub fn sz_zero_pattern(n_sites: usize, n_up: usize, n_dn: usize) -> BTreeSet<(usize, usize)> {
    let space = PairSpace::for_sites(n_sites);
    let content: Vec<(usize, usize)> = space.pairs().map(|(p, q)| spin_content(p, q)).collect();
    let mut zeros = BTreeSet::new();
    for (a, &ca) in content.iter().enumerate() {
        for (b, &cb) in content.iter().enumerate() {
            if ca != cb || ca.0 > n_up || ca.1 > n_dn {
                zeros.insert((a, b));
            }
        }
    }
    zeros
}
