//! Experiment runner: target construction, completion runs, noise sweeps and
//! the files each of them writes.
//!
//! Configuration is TOML. Every key is optional and unknown keys are errors;
//! an empty file reproduces the reference three-site run.
//!
//! ```toml
//! seed = 0
//! basis = "site"                # or "pair-eigenbasis"
//!
//! [model]
//! L = 3
//! t = 1.0
//! U = 4.0
//! eps = [0.0, 0.3, -0.2, 0.15, 0.0, 0.1]   # flat spin-orbital order, 2L entries
//! periodic = false
//! sector = [2, 1]               # (N_up, N_down)
//!
//! [target]
//! degeneracy_tol = 1e-8
//! nonzero_tol = 1e-12
//! noise = { epsilon = 1e-2, symmetrize = "orbit" }   # optional; seed derived if absent
//!
//! [anneal]
//! T0 = 1e-2
//! delta_T = 0.999
//! theta_max0 = 0.5
//! delta_theta_plus = 1.01
//! delta_theta_minus = 0.99
//! k_max = 200000
//! record_stride = 100
//! initial = "ground-excited"    # or { random = { seed = 1 } } or { vector = [...] }
//!
//! [output]
//! dir = "rdmc-out"
//! svg = true
//!
//! [sweep]
//! epsilons = [0.0, 1e-3, 1e-2, 1e-1]
//! symmetrize = "orbit"
//! parallel = true
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::annealer::{
    anneal, build_pool, fmt_f64, AnnealConfig, AnnealTrace, CompletionProblem, InitialState,
    Reference,
};
use crate::error::{Error, Result};
use crate::fock::{enumerate_sector, SectorBasis};
use crate::hamiltonian::{
    build_hubbard, critical_subset, ground_state, pair_eigenbasis, reduce_to_two_body, BasisTag,
    CriticalSubset, GroundStateResult, HubbardParams, PairEigenbasis, TwoBodyReducedHamiltonian,
};
use crate::heatmap::emit_heatmap;
use crate::linalg::hermitian_eigen;
use crate::rdm::{
    add_noise, hs_distance, sz_zero_pattern, two_rdm_from_state, NoiseSpec, NoiseSymmetry,
    RdmKernel, TwoRDM,
};

pub const SUMMARY_FORMAT: &str = "rdmc-summary v1";
const SWEEP_HEADER: &str = "# noise-sweep v1";
const NOISE_STREAM: u64 = 0x6e6f_6973_6521;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub t: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub eps: Vec<f64>,
    pub periodic: bool,
    pub sector: [usize; 2],
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = HubbardParams::reference();
        Self {
            n_sites: p.n_sites,
            t: p.hopping,
            u: p.interaction,
            eps: p.onsite,
            periodic: p.periodic,
            sector: [2, 1],
        }
    }
}

impl ModelConfig {
    pub fn params(&self) -> HubbardParams {
        HubbardParams {
            n_sites: self.n_sites,
            hopping: self.t,
            interaction: self.u,
            onsite: self.eps.clone(),
            periodic: self.periodic,
        }
    }

    pub fn n_particles(&self) -> usize {
        self.sector[0] + self.sector[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub epsilon: f64,
    /// Derived from the run seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub symmetrize: NoiseSymmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub noise: Option<NoiseBlock>,
    /// Levels closer than this to the target energy count as degenerate.
    pub degeneracy_tol: f64,
    pub nonzero_tol: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            noise: None,
            degeneracy_tol: 1e-8,
            nonzero_tol: crate::hamiltonian::NONZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealBlock {
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
    pub theta_max0: f64,
    pub delta_theta_plus: f64,
    pub delta_theta_minus: f64,
    pub k_max: usize,
    pub record_stride: usize,
    pub initial: InitialState,
}

impl Default for AnnealBlock {
    fn default() -> Self {
        let c = AnnealConfig::default();
        Self {
            t0: c.initial_temperature,
            delta_t: c.temperature_decay,
            theta_max0: c.initial_max_angle,
            delta_theta_plus: c.angle_growth,
            delta_theta_minus: c.angle_shrink,
            k_max: c.max_iterations,
            record_stride: c.record_stride,
            initial: InitialState::GroundExcited,
        }
    }
}

impl AnnealBlock {
    pub fn schedule(&self, seed: u64) -> AnnealConfig {
        AnnealConfig {
            initial_temperature: self.t0,
            temperature_decay: self.delta_t,
            initial_max_angle: self.theta_max0,
            angle_growth: self.delta_theta_plus,
            angle_shrink: self.delta_theta_minus,
            max_iterations: self.k_max,
            seed,
            record_stride: self.record_stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("rdmc-out"),
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub symmetrize: NoiseSymmetry,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 1e-3, 1e-2, 1e-1],
            symmetrize: NoiseSymmetry::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub basis: BasisTag,
    pub model: ModelConfig,
    pub target: TargetConfig,
    pub anneal: AnnealBlock,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            basis: BasisTag::Site,
            model: ModelConfig::default(),
            target: TargetConfig::default(),
            anneal: AnnealBlock::default(),
            output: OutputConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(s).map_err(|e| Error::InvalidConfig(one_line(&e.to_string())))?;
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.params().validate()?;
        let [nu, nd] = self.model.sector;
        if nu > self.model.n_sites || nd > self.model.n_sites {
            return Err(Error::InvalidSector {
                n_sites: self.model.n_sites,
                n_up: nu,
                n_dn: nd,
            });
        }
        if self.model.n_particles() < 2 {
            return Err(Error::TooFewParticles(self.model.n_particles()));
        }
        if let Some(noise) = &self.target.noise {
            check_epsilon(noise.epsilon)?;
        }
        for &e in &self.sweep.epsilons {
            check_epsilon(e)?;
        }
        if !(self.target.degeneracy_tol >= 0.0 && self.target.nonzero_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be non-negative".into(),
            ));
        }
        self.anneal.schedule(self.seed).validate()
    }
}

fn check_epsilon(e: f64) -> Result<()> {
    if (0.0..=0.1).contains(&e) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "noise strength must lie in [0, 0.1], got {e}"
        )))
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Independent, reproducible child seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub total: usize,
    pub sz_nonzero: usize,
    pub critical: usize,
}

/// Everything about the target that does not depend on the annealer.
#[derive(Debug, Clone)]
pub struct TargetAnalysis {
    pub config: ExperimentConfig,
    pub sector: SectorBasis,
    pub spectrum: GroundStateResult,
    /// Distance from the target energy to the nearest other level at the same
    /// particle number, over all spin sectors.
    pub gap: f64,
    /// Reduced Hamiltonian in the working basis.
    pub hamiltonian: TwoBodyReducedHamiltonian,
    pub eigenbasis: Option<PairEigenbasis>,
    /// Noiseless target in the working basis.
    pub clean_target: TwoRDM,
    /// Target the annealer is fed: `clean_target`, or its noisy version.
    pub target: TwoRDM,
    pub noise: Option<NoiseSpec>,
    pub subset: CriticalSubset,
    pub counts: Counts,
}

impl TargetAnalysis {
    pub fn kernel(&self) -> RdmKernel {
        let k = RdmKernel::new(&self.sector);
        match &self.eigenbasis {
            Some(eig) => k.in_eigenbasis(eig),
            None => k,
        }
    }

    /// Completion problem whose diagnostics are measured against the noiseless target.
    pub fn problem(&self) -> Result<CompletionProblem> {
        CompletionProblem::new(self.kernel(), &self.target, self.subset.clone())?.with_reference(
            Reference {
                rdm: self.clean_target.clone(),
                state: self.spectrum.state.clone(),
                energy: self.spectrum.energy,
                hamiltonian: self.hamiltonian.clone(),
            },
        )
    }

    pub fn initial_state(&self) -> Result<crate::CVector> {
        self.config.anneal.initial.prepare(&self.spectrum)
    }
}

/// Sorted eigenvalues of every `S_z` sector with `n` particles.
fn fixed_n_spectrum(params: &HubbardParams, n: usize) -> Result<Vec<f64>> {
    let l = params.n_sites;
    let mut levels = Vec::new();
    for nu in n.saturating_sub(l)..=n.min(l) {
        let basis = enumerate_sector(l, nu, n - nu)?;
        levels.extend(hermitian_eigen(&build_hubbard(params, &basis)?).0);
    }
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

pub fn analyze_target(config: &ExperimentConfig) -> Result<TargetAnalysis> {
    config.validate()?;
    let params = config.model.params();
    let [nu, nd] = config.model.sector;
    let n = nu + nd;
    let sector = enumerate_sector(params.n_sites, nu, nd)?;
    let spectrum = ground_state(
        &build_hubbard(&params, &sector)?,
        config.target.degeneracy_tol,
    )?;

    // the target state must be the unique state at its energy among all
    // states with the same particle number
    let levels = fixed_n_spectrum(&params, n)?;
    let at = levels
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - spectrum.energy)
                .abs()
                .total_cmp(&(b.1 - spectrum.energy).abs())
        })
        .map_or(0, |(i, _)| i);
    let gap = levels
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != at)
        .map(|(_, e)| (e - spectrum.energy).abs())
        .fold(f64::INFINITY, f64::min);
    if gap <= config.target.degeneracy_tol {
        return Err(Error::DegenerateGroundState {
            gap,
            tol: config.target.degeneracy_tol,
        });
    }

    let site_h2 = reduce_to_two_body(&params, n)?;
    let site_clean = two_rdm_from_state(&spectrum.state, &sector)?;
    let noise = config.target.noise.map(|b| NoiseSpec {
        epsilon: b.epsilon,
        seed: b
            .seed
            .unwrap_or_else(|| derive_seed(config.seed, NOISE_STREAM)),
        symmetrize: b.symmetrize,
    });
    let site_target = match &noise {
        Some(spec) => add_noise(&site_clean, spec),
        None => site_clean.clone(),
    };

    let zeros = sz_zero_pattern(params.n_sites, nu, nd);
    let d = site_clean.dim();
    let sz_nonzero = (0..d)
        .flat_map(|a| (0..d).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            !zeros.contains(&(a, b)) && site_clean.get(a, b).norm() > config.target.nonzero_tol
        })
        .count();

    let (hamiltonian, eigenbasis, clean_target, target) = match config.basis {
        BasisTag::Site => (site_h2, None, site_clean, site_target),
        BasisTag::PairEigen => {
            let eig = pair_eigenbasis(&site_h2);
            let h = eig.transform_hamiltonian(&site_h2)?;
            let clean = site_clean.rotated(&eig)?;
            let target = site_target.rotated(&eig)?;
            (h, Some(eig), clean, target)
        }
    };
    let subset = critical_subset(&hamiltonian, config.target.nonzero_tol);
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let counts = Counts {
        total: d * d,
        sz_nonzero,
        critical: subset.len(),
    };
    Ok(TargetAnalysis {
        config: config.clone(),
        sector,
        spectrum,
        gap,
        hamiltonian,
        eigenbasis,
        clean_target,
        target,
        noise,
        subset,
        counts,
    })
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub basis: BasisTag,
    pub n_sites: usize,
    pub sector: [usize; 2],
    pub seed: u64,
    pub counts: Counts,
    pub noise: Option<NoiseSpec>,
    pub energy: f64,
    pub gap: f64,
    pub anneal: Option<AnnealSummary>,
}

/// Scores of the best state of a run against the noiseless target.
#[derive(Debug, Clone, Copy)]
pub struct AnnealSummary {
    pub pool_size: usize,
    pub iterations: usize,
    pub accepted: usize,
    pub d_min: f64,
    pub d_min_iteration: usize,
    pub partial_distance_clean: f64,
    pub full_distance: f64,
    pub infidelity: f64,
    pub energy_deviation: f64,
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&fmt_f64(x)).expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

impl Summary {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("format".into(), SUMMARY_FORMAT.into());
        m.insert("basis".into(), self.basis.as_str().into());
        m.insert("L".into(), self.n_sites.into());
        m.insert("sector".into(), vec![self.sector[0], self.sector[1]].into());
        m.insert("seed".into(), self.seed.into());
        let mut counts = Map::new();
        counts.insert("total".into(), self.counts.total.into());
        counts.insert("sz_nonzero".into(), self.counts.sz_nonzero.into());
        counts.insert("critical".into(), self.counts.critical.into());
        m.insert("counts".into(), counts.into());
        m.insert("E0".into(), num(self.energy));
        m.insert("gap".into(), num(self.gap));
        m.insert(
            "noise".into(),
            match &self.noise {
                Some(n) => {
                    let mut o = Map::new();
                    o.insert("epsilon".into(), num(n.epsilon));
                    o.insert("seed".into(), n.seed.into());
                    o.insert("symmetrize".into(), n.symmetrize.as_str().into());
                    o.into()
                }
                None => Value::Null,
            },
        );
        if let Some(a) = &self.anneal {
            m.insert("pool_size".into(), a.pool_size.into());
            m.insert("iterations".into(), a.iterations.into());
            m.insert("accepted".into(), a.accepted.into());
            m.insert("D_min".into(), num(a.d_min));
            m.insert("D_min_iteration".into(), a.d_min_iteration.into());
            m.insert(
                "partial_distance_noiseless".into(),
                num(a.partial_distance_clean),
            );
            m.insert("final_full_distance".into(), num(a.full_distance));
            m.insert("final_infidelity".into(), num(a.infidelity));
            m.insert("final_energy_deviation".into(), num(a.energy_deviation));
        }
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn base_summary(a: &TargetAnalysis) -> Summary {
    Summary {
        basis: a.config.basis,
        n_sites: a.config.model.n_sites,
        sector: a.config.model.sector,
        seed: a.config.seed,
        counts: a.counts,
        noise: a.noise,
        energy: a.spectrum.energy,
        gap: a.gap,
        anneal: None,
    }
}

#[derive(Debug, Clone)]
pub struct CompletionOutcome {
    pub analysis: TargetAnalysis,
    pub trace: AnnealTrace,
    /// 2-RDM of the best state, in the working basis.
    pub completed: TwoRDM,
    pub summary: Summary,
}

pub fn run_completion(config: &ExperimentConfig) -> Result<CompletionOutcome> {
    let analysis = analyze_target(config)?;
    let problem = analysis.problem()?;
    let pool = build_pool(&analysis.sector);
    let psi0 = analysis.initial_state()?;
    let trace = anneal(&problem, &psi0, &pool, &config.anneal.schedule(config.seed))?;
    let completed = problem.rdm(&trace.best_state);
    let e = crate::rdm::energy_from_rdm(&analysis.hamiltonian, &completed)?;
    let anneal_summary = AnnealSummary {
        pool_size: pool.len(),
        iterations: trace.iterations,
        accepted: trace.accepted,
        d_min: trace.d_min,
        d_min_iteration: trace.best_iteration,
        partial_distance_clean: hs_distance(
            &completed,
            &analysis.clean_target,
            Some(&analysis.subset),
        )?,
        full_distance: hs_distance(&completed, &analysis.clean_target, None)?,
        infidelity: crate::rdm::infidelity(&trace.best_state, &analysis.spectrum.state)?,
        energy_deviation: e - analysis.spectrum.energy,
    };
    let summary = Summary {
        anneal: Some(anneal_summary),
        ..base_summary(&analysis)
    };
    Ok(CompletionOutcome {
        analysis,
        trace,
        completed,
        summary,
    })
}

/// Files written for one run, all inside one directory.
#[derive(Debug, Clone)]
pub struct BundlePaths {
    pub dir: PathBuf,
    pub target: PathBuf,
    pub subset: PathBuf,
    pub summary: PathBuf,
    pub trace: Option<PathBuf>,
    pub heatmaps: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_sheet(
    rdm: &TwoRDM,
    subset: &CriticalSubset,
    dir: &Path,
    stem: &str,
    svg: bool,
) -> Result<Vec<PathBuf>> {
    let sheet = emit_heatmap(rdm, subset, true)?;
    let csv = dir.join(format!("{stem}.csv"));
    sheet.write_csv(create(&csv)?)?;
    let mut out = vec![csv];
    if svg {
        let path = dir.join(format!("{stem}.svg"));
        sheet.write_svg(create(&path)?, &format!("{stem} ({})", rdm.basis()))?;
        out.push(path);
    }
    Ok(out)
}

fn write_target_files(a: &TargetAnalysis, dir: &Path, summary: &Summary) -> Result<BundlePaths> {
    fs::create_dir_all(dir)?;
    let target = dir.join("target.rdm");
    a.target.write_to(create(&target)?)?;
    let subset = dir.join("subset.txt");
    a.subset.write_to(create(&subset)?)?;
    let heatmaps = write_sheet(
        &a.target,
        &a.subset,
        dir,
        "heatmap_target",
        a.config.output.svg,
    )?;
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, summary.to_json_string())?;
    Ok(BundlePaths {
        dir: dir.to_path_buf(),
        target,
        subset,
        summary: summary_path,
        trace: None,
        heatmaps,
    })
}

/// Target, subset, target heat map and a count/energy summary.
pub fn write_target(a: &TargetAnalysis, dir: &Path) -> Result<BundlePaths> {
    write_target_files(a, dir, &base_summary(a))
}

pub fn write_bundle(outcome: &CompletionOutcome, dir: &Path) -> Result<BundlePaths> {
    let mut paths = write_target_files(&outcome.analysis, dir, &outcome.summary)?;
    let trace = dir.join("trace.csv");
    outcome.trace.write_csv(create(&trace)?)?;
    paths.trace = Some(trace);
    let completed = dir.join("completed.rdm");
    outcome.completed.write_to(create(&completed)?)?;
    paths.heatmaps.extend(write_sheet(
        &outcome.completed,
        &outcome.analysis.subset,
        dir,
        "heatmap_completed",
        outcome.analysis.config.output.svg,
    )?);
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct ExperimentBundle {
    pub outcome: CompletionOutcome,
    pub paths: BundlePaths,
}

/// [`run_completion`] followed by [`write_bundle`] into the configured directory.
pub fn run_completion_experiment(config: &ExperimentConfig) -> Result<ExperimentBundle> {
    let outcome = run_completion(config)?;
    let paths = write_bundle(&outcome, &config.output.dir)?;
    Ok(ExperimentBundle { outcome, paths })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub seed: u64,
    pub noise_seed: u64,
    /// `D_min` against the noisy target on the critical subset.
    pub d_min: f64,
    /// Best state against the noiseless target, critical subset only.
    pub d_critical_clean: f64,
    /// Best state against the noiseless target, all positions.
    pub d_full_clean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Distances in both the norm and squared-norm conventions.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SWEEP_HEADER}")?;
        writeln!(
            w,
            "epsilon,seed,noise_seed,D_min_critical_noisy,D_critical_noiseless,D_full_noiseless,\
             D2_min_critical_noisy,D2_critical_noiseless,D2_full_noiseless"
        )?;
        for r in &self.rows {
            let cols = [r.d_min, r.d_critical_clean, r.d_full_clean];
            let mut fields = vec![
                fmt_f64(r.epsilon),
                r.seed.to_string(),
                r.noise_seed.to_string(),
            ];
            fields.extend(cols.iter().map(|&x| fmt_f64(x)));
            fields.extend(cols.iter().map(|&x| fmt_f64(x * x)));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

fn sweep_row_config(config: &ExperimentConfig, index: usize, epsilon: f64) -> ExperimentConfig {
    let seed = derive_seed(config.seed, index as u64);
    let mut c = config.clone();
    c.seed = seed;
    c.target.noise = Some(NoiseBlock {
        epsilon,
        seed: Some(derive_seed(seed, NOISE_STREAM)),
        symmetrize: config.sweep.symmetrize,
    });
    c
}

fn sweep_outcomes(config: &ExperimentConfig, epsilons: &[f64]) -> Result<Vec<CompletionOutcome>> {
    config.validate()?;
    for &e in epsilons {
        check_epsilon(e)?;
    }
    let configs: Vec<ExperimentConfig> = epsilons
        .iter()
        .enumerate()
        .map(|(i, &e)| sweep_row_config(config, i, e))
        .collect();
    let results: Vec<Result<CompletionOutcome>> = if config.sweep.parallel {
        configs.par_iter().map(run_completion).collect()
    } else {
        configs.iter().map(run_completion).collect()
    };
    results.into_iter().collect()
}

fn row_of(o: &CompletionOutcome) -> SweepRow {
    let a = o
        .summary
        .anneal
        .expect("completion summary has anneal scores");
    let noise = o.analysis.noise.expect("sweep rows are noisy");
    SweepRow {
        epsilon: noise.epsilon,
        seed: o.analysis.config.seed,
        noise_seed: noise.seed,
        d_min: a.d_min,
        d_critical_clean: a.partial_distance_clean,
        d_full_clean: a.full_distance,
    }
}

/// One independent run per noise strength, with seeds derived from the
/// configured seed and the row index.
pub fn run_noise_sweep(config: &ExperimentConfig, epsilons: &[f64]) -> Result<SweepTable> {
    Ok(SweepTable {
        rows: sweep_outcomes(config, epsilons)?
            .iter()
            .map(row_of)
            .collect(),
    })
}

/// [`run_noise_sweep`] writing `sweep.csv` plus one bundle directory per row.
pub fn run_noise_sweep_to_dir(
    config: &ExperimentConfig,
    epsilons: &[f64],
    dir: &Path,
) -> Result<SweepTable> {
    let outcomes = sweep_outcomes(config, epsilons)?;
    fs::create_dir_all(dir)?;
    for (i, o) in outcomes.iter().enumerate() {
        write_bundle(o, &dir.join(format!("row-{i}")))?;
    }
    let table = SweepTable {
        rows: outcomes.iter().map(row_of).collect(),
    };
    table.write_csv(create(&dir.join("sweep.csv"))?)?;
    Ok(table)
}

pub fn read_rdm(path: &Path) -> Result<TwoRDM> {
    TwoRDM::read_from(BufReader::new(File::open(path)?))
}

pub fn read_subset(path: &Path) -> Result<CriticalSubset> {
    CriticalSubset::read_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(mut c: ExperimentConfig) -> ExperimentConfig {
        c.anneal.k_max = 2_000;
        c
    }

    #[test]
    fn empty_config_is_the_reference_run() {
        let c: ExperimentConfig = "".parse().unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.model.params(), HubbardParams::reference());
    }

    #[test]
    fn config_parses_documented_keys() {
        let text = r#"
            seed = 5
            basis = "pair-eigenbasis"
            [model]
            L = 3
            t = 1.0
            U = 4.0
            eps = [0.0, 0.3, -0.2, 0.15, 0.0, 0.1]
            sector = [2, 1]
            [target]
            noise = { epsilon = 1e-2, symmetrize = "project" }
            [anneal]
            T0 = 0.0
            k_max = 10
            initial = { random = { seed = 3 } }
            [output]
            dir = "x"
            svg = false
            [sweep]
            epsilons = [0.0, 0.05]
        "#;
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.basis, BasisTag::PairEigen);
        assert_eq!(c.target.noise.unwrap().symmetrize, NoiseSymmetry::Project);
        assert_eq!(c.anneal.initial, InitialState::Random { seed: 3 });
        assert_eq!(c.anneal.k_max, 10);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        for bad in [
            "sed = 1",
            "[anneal]\nT_0 = 1.0",
            "[model]\nLL = 3",
            "[target]\nnoise = { epsilon = 0.5 }",
            "[anneal]\ndelta_theta_plus = 0.5",
            "[model]\nsector = [4, 0]",
            "basis = \"momentum\"",
        ] {
            let err = bad.parse::<ExperimentConfig>().unwrap_err();
            assert!(!err.to_string().contains('\n'), "{bad}: {err}");
        }
    }

    #[test]
    fn reference_counts() {
        let site = analyze_target(&ExperimentConfig::default()).unwrap();
        assert_eq!(
            site.counts,
            Counts {
                total: 900,
                sz_nonzero: 360,
                critical: 184
            }
        );
        assert!(site.gap > 1e-3);
        let eig = analyze_target(&ExperimentConfig {
            basis: BasisTag::PairEigen,
            ..ExperimentConfig::default()
        })
        .unwrap();
        assert_eq!(eig.counts.critical, 27);
        assert_eq!(eig.counts.sz_nonzero, 360);
    }

    #[test]
    fn symmetric_model_is_refused() {
        let mut c = ExperimentConfig::default();
        c.model.eps = vec![0.0; 6];
        let err = analyze_target(&c).unwrap_err();
        assert_eq!(err.code(), "degenerate_ground_state");
        assert!(err.to_string().contains("non-degenerate"));
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..4).map(|i| derive_seed(7, i)).collect();
        for i in 0..4 {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(derive_seed(7, 2), s[2]);
        assert_ne!(derive_seed(8, 2), s[2]);
    }

    #[test]
    fn summary_json_is_deterministic_and_recountable() {
        let dir = tempfile::tempdir().unwrap();
        let c = quick(ExperimentConfig::default());
        let a = write_bundle(&run_completion(&c).unwrap(), &dir.path().join("a")).unwrap();
        let b = write_bundle(&run_completion(&c).unwrap(), &dir.path().join("b")).unwrap();
        for (x, y) in [
            (&a.summary, &b.summary),
            (a.trace.as_ref().unwrap(), b.trace.as_ref().unwrap()),
        ] {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let json: Value = serde_json::from_slice(&fs::read(&a.summary).unwrap()).unwrap();
        let reported = json["counts"]["critical"].as_u64().unwrap() as usize;
        assert_eq!(read_subset(&a.subset).unwrap().len(), reported);
        assert_eq!(json["counts"]["total"].as_u64(), Some(900));
        let e0 = json["E0"].to_string();
        assert_eq!(
            e0.split('e').next().unwrap().trim_start_matches('-').len(),
            18
        );
        assert_eq!(
            read_rdm(&a.target).unwrap().elements(),
            analyze_target(&c).unwrap().target.elements()
        );
    }

    #[test]
    fn sweep_rows_are_reproducible_in_parallel() {
        let mut c = quick(ExperimentConfig::default());
        let eps = [0.0, 1e-2];
        let par = run_noise_sweep(&c, &eps).unwrap();
        c.sweep.parallel = false;
        assert_eq!(run_noise_sweep(&c, &eps).unwrap(), par);
        assert_ne!(par.rows[0].seed, par.rows[1].seed);
        assert!(run_noise_sweep(&c, &[0.2]).is_err());
    }
}
