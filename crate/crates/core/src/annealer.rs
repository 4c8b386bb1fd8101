//! Stochastic annealing over the unitary orbit of a trial state.
//!
//! Each step picks a generator `G` uniformly from the pool, draws
//! `θ ~ U[-θ_max, θ_max]`, forms `e^{θG}|ψ⟩`, and accepts with the Metropolis
//! rule on the partial Hilbert–Schmidt distance to the target subset. The
//! angle bound grows on acceptance and shrinks on rejection; the temperature
//! decays geometrically.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_excitation_string, spin_of, Ladder, SectorBasis};
use crate::hamiltonian::{CriticalSubset, GroundStateResult, TwoBodyReducedHamiltonian};
use crate::linalg::{anti_hermitian_deviation, hermitian_eigen, norm, CMatrix, CVector};
use crate::rdm::{energy_from_rdm, hs_distance, infidelity, RdmKernel, TwoRDM};

/// Angle bounds are kept inside `[MIN_ANGLE, π]`.
pub const MIN_ANGLE: f64 = 1e-8;
pub const MAX_ANGLE: f64 = std::f64::consts::PI;

const TRACE_HEADER: &str = "# anneal-trace v1";
const TRACE_COLUMNS: [&str; 9] = [
    "k",
    "D_partial",
    "D_full",
    "energy_dev",
    "infidelity",
    "T",
    "theta_max",
    "accepted",
    "generator_id",
];

/// `e^{θG} = W e^{-iθΛ} W†` from the eigen-decomposition `iG = W Λ W†`.
#[derive(Debug, Clone)]
struct Rotation {
    vectors: CMatrix,
    values: Vec<f64>,
}

impl Rotation {
    fn new(generator: &CMatrix) -> Self {
        let hermitian = generator * Complex64::i();
        let (values, vectors) = hermitian_eigen(&hermitian);
        Self { vectors, values }
    }

    fn apply(&self, psi: &CVector, theta: f64) -> CVector {
        let mut coeffs = self.vectors.ad_mul(psi);
        for (c, &lambda) in coeffs.iter_mut().zip(&self.values) {
            *c *= Complex64::from_polar(1.0, -theta * lambda);
        }
        &self.vectors * coeffs
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub label: String,
    matrix: CMatrix,
    rotation: Rotation,
}

impl Generator {
    pub fn new(label: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        let dev = anti_hermitian_deviation(&matrix);
        if dev > 1e-12 {
            return Err(Error::NotAntiHermitian(dev));
        }
        let rotation = Rotation::new(&matrix);
        Ok(Self {
            label: label.into(),
            matrix,
            rotation,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rotate(&self, psi: &CVector, theta: f64) -> CVector {
        self.rotation.apply(psi, theta)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OperatorPool {
    generators: Vec<Generator>,
}

impl OperatorPool {
    pub fn from_generators(generators: Vec<Generator>) -> Self {
        Self { generators }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn get(&self, i: usize) -> &Generator {
        &self.generators[i]
    }
}

/// Sector matrix of `Σ coeff · ops`.
fn sector_matrix(basis: &SectorBasis, terms: &[(f64, Vec<Ladder>)]) -> CMatrix {
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for (j, &det) in basis.dets().iter().enumerate() {
        for (c, ops) in terms {
            if let Some((out, sign)) = apply_excitation_string(det, ops) {
                if let Some(i) = basis.index_of(out) {
                    m[(i, j)] += Complex64::new(c * f64::from(sign), 0.0);
                }
            }
        }
    }
    m
}

/// Sign-normalized key for deduplication: first non-negligible entry positive.
fn canonical(m: &CMatrix) -> CMatrix {
    match m.iter().find(|z| z.norm() > 1e-12) {
        Some(z) if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) => -m,
        _ => m.clone(),
    }
}

/// Number- and `S_z`-conserving anti-Hermitian singles `a†_p a_q - a†_q a_p`
/// (same spin) and doubles `a†_p a†_q a_s a_r - h.c.`, dropping generators
/// that vanish on the sector and duplicates up to sign.
pub fn build_pool(basis: &SectorBasis) -> OperatorPool {
    use Ladder::*;
    let m = basis.n_orbitals();
    type Candidate = (String, Vec<(f64, Vec<Ladder>)>);
    let mut candidates: Vec<Candidate> = Vec::new();
    for p in 0..m {
        for q in p + 1..m {
            if spin_of(p) == spin_of(q) {
                candidates.push((
                    format!("single {p}<-{q}"),
                    vec![
                        (1.0, vec![Create(p), Annihilate(q)]),
                        (-1.0, vec![Create(q), Annihilate(p)]),
                    ],
                ));
            }
        }
    }
    let unordered: Vec<(usize, usize)> = (0..m)
        .flat_map(|p| (p + 1..m).map(move |q| (p, q)))
        .collect();
    let up_count = |(p, q): (usize, usize)| {
        [p, q]
            .iter()
            .filter(|&&x| spin_of(x) == crate::fock::Spin::Up)
            .count()
    };
    for (i, &(p, q)) in unordered.iter().enumerate() {
        for &(r, s) in &unordered[i + 1..] {
            if up_count((p, q)) != up_count((r, s)) {
                continue;
            }
            candidates.push((
                format!("double {p}{q}<-{r}{s}"),
                vec![
                    (
                        1.0,
                        vec![Create(p), Create(q), Annihilate(s), Annihilate(r)],
                    ),
                    (
                        -1.0,
                        vec![Create(r), Create(s), Annihilate(q), Annihilate(p)],
                    ),
                ],
            ));
        }
    }

    let mut seen: Vec<CMatrix> = Vec::new();
    let mut generators = Vec::new();
    for (label, terms) in candidates {
        let g = sector_matrix(basis, &terms);
        if g.iter().all(|z| z.norm() <= 1e-12) {
            continue;
        }
        let key = canonical(&g);
        if seen.iter().any(|k| (k - &key).norm() <= 1e-12) {
            continue;
        }
        seen.push(key);
        generators.push(
            Generator::new(label, g).expect("pool generators are anti-Hermitian by construction"),
        );
    }
    OperatorPool { generators }
}

/// `e^{θG} ψ` by eigen-decomposition of the Hermitian matrix `iG`.
pub fn apply_rotation(psi: &CVector, generator: &CMatrix, theta: f64) -> Result<CVector> {
    let dev = anti_hermitian_deviation(generator);
    if dev > 1e-12 {
        return Err(Error::NotAntiHermitian(dev));
    }
    if psi.len() != generator.nrows() {
        return Err(Error::DimensionMismatch {
            expected: generator.nrows(),
            found: psi.len(),
        });
    }
    let n = norm(psi);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n));
    }
    Ok(Rotation::new(generator).apply(psi, theta))
}

/// Schedule constants; defaults are tuned for the three-site reference model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealConfig {
    pub initial_temperature: f64,
    pub temperature_decay: f64,
    pub initial_max_angle: f64,
    pub angle_growth: f64,
    pub angle_shrink: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Trace rows are kept every `record_stride` iterations (and at the end).
    pub record_stride: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            initial_temperature: 1e-2,
            temperature_decay: 0.999,
            initial_max_angle: 0.5,
            angle_growth: 1.01,
            angle_shrink: 0.99,
            max_iterations: 200_000,
            seed: 0,
            record_stride: 100,
        }
    }
}

impl AnnealConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// A zero initial temperature is allowed and makes the run strictly greedy.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.initial_temperature >= 0.0 && self.initial_temperature.is_finite()) {
            return fail(format!("T0 must be >= 0, got {}", self.initial_temperature));
        }
        if !(self.temperature_decay > 0.0 && self.temperature_decay <= 1.0) {
            return fail(format!(
                "delta_T must be in (0, 1], got {}",
                self.temperature_decay
            ));
        }
        if !(self.initial_max_angle > 0.0 && self.initial_max_angle.is_finite()) {
            return fail(format!(
                "theta_max0 must be > 0, got {}",
                self.initial_max_angle
            ));
        }
        if !(self.angle_growth >= 1.0 && self.angle_growth.is_finite()) {
            return fail(format!(
                "delta_theta_plus must be >= 1, got {}",
                self.angle_growth
            ));
        }
        if !(self.angle_shrink > 0.0 && self.angle_shrink <= 1.0) {
            return fail(format!(
                "delta_theta_minus must be in (0, 1], got {}",
                self.angle_shrink
            ));
        }
        if self.record_stride == 0 {
            return fail("record_stride must be >= 1".into());
        }
        Ok(())
    }
}

/// Exact quantities the run is scored against; never used by the cost.
#[derive(Debug, Clone)]
pub struct Reference {
    /// Full target 2-RDM in the problem's basis.
    pub rdm: TwoRDM,
    pub state: CVector,
    pub energy: f64,
    /// Reduced Hamiltonian in the problem's basis.
    pub hamiltonian: TwoBodyReducedHamiltonian,
}

/// Target values on the critical subset together with the map from states to
/// 2-RDMs in the same basis.
#[derive(Debug, Clone)]
pub struct CompletionProblem {
    kernel: RdmKernel,
    subset: CriticalSubset,
    positions: Vec<(usize, usize)>,
    target_values: Vec<Complex64>,
    reference: Option<Reference>,
}

impl CompletionProblem {
    /// Only the entries of `target` inside `subset` are retained.
    pub fn new(kernel: RdmKernel, target: &TwoRDM, subset: CriticalSubset) -> Result<Self> {
        for tag in [target.basis(), subset.basis()] {
            if tag != kernel.basis_tag() {
                return Err(Error::BasisMismatch {
                    left: kernel.basis_tag().to_string(),
                    right: tag.to_string(),
                });
            }
        }
        if subset.space().dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: subset.space().dim(),
            });
        }
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let positions: Vec<(usize, usize)> = subset.iter().collect();
        let target_values = positions.iter().map(|&(a, b)| target.get(a, b)).collect();
        Ok(Self {
            kernel,
            subset,
            positions,
            target_values,
            reference: None,
        })
    }

    pub fn with_reference(mut self, reference: Reference) -> Result<Self> {
        if reference.rdm.basis() != self.kernel.basis_tag()
            || reference.hamiltonian.basis() != self.kernel.basis_tag()
        {
            return Err(Error::BasisMismatch {
                left: self.kernel.basis_tag().to_string(),
                right: reference.rdm.basis().to_string(),
            });
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn subset(&self) -> &CriticalSubset {
        &self.subset
    }

    pub fn kernel(&self) -> &RdmKernel {
        &self.kernel
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    /// Partial Hilbert–Schmidt distance between `Γ(ψ)` and the target subset.
    pub fn cost(&self, psi: &CVector) -> f64 {
        let phi = self.kernel.amplitudes(psi);
        self.kernel
            .values_at(&phi, &self.positions)
            .iter()
            .zip(&self.target_values)
            .map(|(g, t)| (g - t).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn rdm(&self, psi: &CVector) -> TwoRDM {
        self.kernel.rdm_unchecked(psi)
    }

    /// `‖²H restricted to S‖_HS`, the constant in `|E - E0| <= ‖H_S‖ · D`.
    pub fn energy_bound_constant(&self) -> Option<f64> {
        self.reference
            .as_ref()
            .map(|r| r.hamiltonian.subset_norm(&self.subset))
    }

    fn diagnostics(&self, psi: &CVector) -> (f64, f64, f64) {
        match &self.reference {
            Some(r) => {
                let g = self.kernel.rdm_unchecked(psi);
                let full = hs_distance(&g, &r.rdm, None).unwrap_or(f64::NAN);
                let energy = energy_from_rdm(&r.hamiltonian, &g).map_or(f64::NAN, |e| e - r.energy);
                let infid = infidelity(psi, &r.state).unwrap_or(f64::NAN);
                (full, energy, infid)
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub d_partial: f64,
    pub d_full: f64,
    pub energy_dev: f64,
    pub infidelity: f64,
    pub temperature: f64,
    pub theta_max: f64,
    pub accepted: bool,
    pub generator: Option<usize>,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct AnnealTrace {
    pub records: Vec<TraceRecord>,
    pub d_min: f64,
    pub best_iteration: usize,
    pub best_state: CVector,
    pub final_state: CVector,
    pub final_distance: f64,
    pub iterations: usize,
    pub accepted: usize,
    pub clamp_events: usize,
}

impl AnnealTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        let mut csv = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.into());
        csv.write_record(TRACE_COLUMNS).map_err(io)?;
        for r in &self.records {
            csv.write_record([
                r.k.to_string(),
                fmt_f64(r.d_partial),
                fmt_f64(r.d_full),
                fmt_f64(r.energy_dev),
                fmt_f64(r.infidelity),
                fmt_f64(r.temperature),
                fmt_f64(r.theta_max),
                u8::from(r.accepted).to_string(),
                r.generator.map_or_else(String::new, |g| g.to_string()),
            ])
            .map_err(io)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// 17 significant digits, `nan` for missing diagnostics.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn anneal(
    problem: &CompletionProblem,
    psi0: &CVector,
    pool: &OperatorPool,
    config: &AnnealConfig,
) -> Result<AnnealTrace> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if psi0.len() != problem.kernel.n_dets() {
        return Err(Error::DimensionMismatch {
            expected: problem.kernel.n_dets(),
            found: psi0.len(),
        });
    }
    let n0 = norm(psi0);
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut psi = psi0.clone();
    let mut cost = problem.cost(&psi);
    let mut temperature = config.initial_temperature;
    let (mut theta_max, mut clamped) = clamp_angle(config.initial_max_angle);
    let mut clamp_events = usize::from(clamped);
    let mut accepted_total = 0;
    let mut best = (cost, 0, psi.clone());

    let record = |k: usize,
                  psi: &CVector,
                  cost: f64,
                  t: f64,
                  th: f64,
                  acc: bool,
                  g: Option<usize>,
                  cl: bool| {
        let (d_full, energy_dev, infid) = problem.diagnostics(psi);
        TraceRecord {
            k,
            d_partial: cost,
            d_full,
            energy_dev,
            infidelity: infid,
            temperature: t,
            theta_max: th,
            accepted: acc,
            generator: g,
            clamped: cl,
        }
    };
    let mut records = vec![record(
        0,
        &psi,
        cost,
        temperature,
        theta_max,
        true,
        None,
        clamped,
    )];

    for k in 0..config.max_iterations {
        let g = rng.random_range(0..pool.len());
        let u: f64 = rng.random();
        let theta = (2.0 * u - 1.0) * theta_max;
        let candidate = pool.get(g).rotate(&psi, theta);
        let candidate_cost = problem.cost(&candidate);
        let delta = candidate_cost - cost;
        let accepted = if delta <= 0.0 {
            true
        } else {
            let p = (-delta / temperature).exp();
            let r: f64 = rng.random();
            r < p
        };
        if accepted {
            psi = candidate;
            // keep the norm pinned against accumulated round-off
            let n = norm(&psi);
            psi /= Complex64::new(n, 0.0);
            cost = candidate_cost;
            theta_max *= config.angle_growth;
            accepted_total += 1;
        } else {
            theta_max *= config.angle_shrink;
        }
        (theta_max, clamped) = clamp_angle(theta_max);
        clamp_events += usize::from(clamped);
        temperature *= config.temperature_decay;
        if cost < best.0 {
            best = (cost, k + 1, psi.clone());
        }
        let step = k + 1;
        if step % config.record_stride == 0 || step == config.max_iterations {
            records.push(record(
                step,
                &psi,
                cost,
                temperature,
                theta_max,
                accepted,
                Some(g),
                clamped,
            ));
        }
    }

    Ok(AnnealTrace {
        records,
        d_min: best.0,
        best_iteration: best.1,
        best_state: best.2,
        final_distance: cost,
        final_state: psi,
        iterations: config.max_iterations,
        accepted: accepted_total,
        clamp_events,
    })
}

fn clamp_angle(theta: f64) -> (f64, bool) {
    let c = theta.clamp(MIN_ANGLE, MAX_ANGLE);
    (c, c != theta)
}

/// One independent chain for [`multi_start`].
#[derive(Debug, Clone)]
pub struct AnnealJob<'a> {
    pub problem: &'a CompletionProblem,
    pub initial: CVector,
    pub config: AnnealConfig,
}

/// Runs independent chains, in parallel when asked; results are in job order
/// and identical to sequential execution.
pub fn multi_start(
    jobs: &[AnnealJob<'_>],
    pool: &OperatorPool,
    parallel: bool,
) -> Vec<Result<AnnealTrace>> {
    let run = |job: &AnnealJob<'_>| anneal(job.problem, &job.initial, pool, &job.config);
    if parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// `(ψ0 + ψ1)/√2` from the two lowest sector eigenstates.
    GroundExcited,
    /// Seeded random real state (the pool is real, so a real start can reach
    /// the real target).
    Random { seed: u64 },
    /// Amplitudes supplied directly (normalized on use).
    Vector(Vec<f64>),
}

impl InitialState {
    pub fn prepare(&self, spectrum: &GroundStateResult) -> Result<CVector> {
        let dim = spectrum.state.len();
        let v = match self {
            InitialState::GroundExcited => {
                let e1 = spectrum
                    .excited_state
                    .as_ref()
                    .ok_or(Error::DimensionMismatch {
                        expected: 2,
                        found: dim,
                    })?;
                &spectrum.state + e1
            }
            InitialState::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                CVector::from_fn(dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
            }
            InitialState::Vector(values) => {
                if values.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: values.len(),
                    });
                }
                CVector::from_iterator(dim, values.iter().map(|&x| Complex64::new(x, 0.0)))
            }
        };
        let n = norm(&v);
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(v / Complex64::new(n, 0.0))
    }
}
