use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdm_completion::annealer::InitialState;
use rdm_completion::experiment::{
    analyze_target, read_rdm, read_subset, run_completion_experiment, run_noise_sweep_to_dir,
    write_target, ExperimentConfig, NoiseBlock,
};
use rdm_completion::hamiltonian::BasisTag;
use rdm_completion::heatmap::emit_heatmap;
use rdm_completion::rdm::NoiseSymmetry;
use rdm_completion::Error;

/// Two-particle reduced density matrix completion experiments.
#[derive(Parser)]
#[command(name = "rdmc", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Build the target 2-RDM and critical subset and report their counts.
    Target(RunArgs),
    /// Complete the target from its critical subset by annealing.
    Complete(RunArgs),
    /// Noise sweep: one completion per noise strength.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated noise strengths in [0, 0.1].
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Run rows one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Render a heat-map sheet from an RDM file and a subset file.
    Heatmap {
        #[arg(long)]
        rdm: PathBuf,
        #[arg(long)]
        subset: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG rendering here.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Plain magnitude grid instead of the subset/complement split.
        #[arg(long)]
        no_split: bool,
    },
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed [default: 0, or the config value].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `site` or `pair-eigenbasis`.
    #[arg(long)]
    basis: Option<String>,
    #[arg(long = "L")]
    sites: Option<usize>,
    #[arg(long = "t", allow_hyphen_values = true)]
    hopping: Option<f64>,
    #[arg(long = "U", allow_hyphen_values = true)]
    interaction: Option<f64>,
    /// Comma-separated on-site energies in spin-orbital order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
    /// `N_up,N_down`.
    #[arg(long, value_delimiter = ',')]
    sector: Option<Vec<usize>>,
    #[arg(long)]
    periodic: bool,
    #[arg(long, allow_hyphen_values = true)]
    noise_epsilon: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// `none`, `project` or `orbit`.
    #[arg(long)]
    noise_symmetry: Option<String>,
    #[arg(long = "T0", allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long = "delta-T", allow_hyphen_values = true)]
    delta_t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_max0: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    record_stride: Option<usize>,
    /// `ground-excited` or `random:SEED`.
    #[arg(long)]
    initial: Option<String>,
    /// Skip SVG renderings.
    #[arg(long)]
    no_svg: bool,
}

fn parse_symmetry(s: &str) -> Result<NoiseSymmetry, Error> {
    match s {
        "none" => Ok(NoiseSymmetry::None),
        "project" => Ok(NoiseSymmetry::Project),
        "orbit" => Ok(NoiseSymmetry::Orbit),
        other => Err(Error::InvalidConfig(format!(
            "unknown noise symmetry {other:?}"
        ))),
    }
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(out) = &self.out {
            c.output.dir = out.clone();
        }
        if let Some(b) = &self.basis {
            c.basis = BasisTag::parse(b)?;
        }
        if let Some(l) = self.sites {
            c.model.n_sites = l;
        }
        if let Some(t) = self.hopping {
            c.model.t = t;
        }
        if let Some(u) = self.interaction {
            c.model.u = u;
        }
        if let Some(eps) = &self.eps {
            c.model.eps = eps.clone();
        }
        if let Some(s) = &self.sector {
            let [nu, nd] = s[..] else {
                return Err(Error::InvalidConfig(
                    "sector takes two values N_up,N_down".into(),
                ));
            };
            c.model.sector = [nu, nd];
        }
        c.model.periodic |= self.periodic;
        if self.noise_epsilon.is_some()
            || self.noise_seed.is_some()
            || self.noise_symmetry.is_some()
        {
            let mut noise = c.target.noise.unwrap_or(NoiseBlock {
                epsilon: 0.0,
                seed: None,
                symmetrize: NoiseSymmetry::default(),
            });
            if let Some(e) = self.noise_epsilon {
                noise.epsilon = e;
            }
            if let Some(s) = self.noise_seed {
                noise.seed = Some(s);
            }
            if let Some(s) = &self.noise_symmetry {
                noise.symmetrize = parse_symmetry(s)?;
            }
            c.target.noise = Some(noise);
        }
        if let Some(x) = self.t0 {
            c.anneal.t0 = x;
        }
        if let Some(x) = self.delta_t {
            c.anneal.delta_t = x;
        }
        if let Some(x) = self.theta_max0 {
            c.anneal.theta_max0 = x;
        }
        if let Some(k) = self.k_max {
            c.anneal.k_max = k;
        }
        if let Some(s) = self.record_stride {
            c.anneal.record_stride = s;
        }
        if let Some(init) = &self.initial {
            c.anneal.initial = match init.split_once(':') {
                None if init == "ground-excited" => InitialState::GroundExcited,
                Some(("random", seed)) => InitialState::Random {
                    seed: seed
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad random seed {seed:?}")))?,
                },
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown initial state {init:?}"
                    )))
                }
            };
        }
        c.output.svg &= !self.no_svg;
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut stdout = io::stdout().lock();
    match cli.verb {
        Verb::Target(args) => {
            let config = args.config()?;
            let analysis = analyze_target(&config)?;
            let paths = write_target(&analysis, &config.output.dir)?;
            stdout.write_all(&std::fs::read(paths.summary)?)?;
        }
        Verb::Complete(args) => {
            let config = args.config()?;
            let bundle = run_completion_experiment(&config)?;
            stdout.write_all(&std::fs::read(bundle.paths.summary)?)?;
        }
        Verb::Sweep {
            run,
            epsilons,
            sequential,
        } => {
            let mut config = run.config()?;
            config.sweep.parallel &= !sequential;
            let eps = epsilons.unwrap_or_else(|| config.sweep.epsilons.clone());
            let table = run_noise_sweep_to_dir(&config, &eps, &config.output.dir)?;
            table.write_csv(&mut stdout)?;
        }
        Verb::Heatmap {
            rdm,
            subset,
            out,
            svg,
            no_split,
        } => {
            let sheet = emit_heatmap(&read_rdm(&rdm)?, &read_subset(&subset)?, !no_split)?;
            sheet.write_csv(BufWriter::new(File::create(&out)?))?;
            if let Some(path) = svg {
                let title = rdm
                    .file_stem()
                    .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                sheet.write_svg(BufWriter::new(File::create(path)?), &title)?;
            }
        }
    }
    stdout.flush()?;
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
