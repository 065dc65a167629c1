//! Run configuration: command-line flags, the flat JSON config file, and the
//! merge of the two. Flags win over file values; hard defaults apply last.

use std::path::{Path, PathBuf};

use carl_core::model::{derive_model, DerivedModel, ModelParams, PhysicalParams};
use carl_core::C64;

use crate::{CliResult, Failure};

#[derive(clap::Parser, Debug)]
#[command(
    name = "carl",
    version,
    about = "Three-mode condensate-cavity dynamics: spectra, time series, sweeps, maps, oracle checks"
)]
pub struct Cli {
    /// Flat JSON file supplying any option not given as a flag; flags win
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<CommandArgs>,
}

#[derive(clap::Subcommand, Debug)]
pub enum CommandArgs {
    /// Report eigenvalues, gain, oscillation frequency, fluctuation ratio, and regime
    Eigen(EigenArgs),
    /// Emit observables over a uniform time grid as CSV
    Evolve(EvolveArgs),
    /// Emit observables along one swept parameter at fixed time as CSV
    Sweep(SweepArgs),
    /// Scan the coupling-detuning plane: regime, gain, fluctuation ratio, correlation margin
    Map(MapArgs),
    /// Check the Gaussian engine against the exact Fock-space oracle
    Validate(ValidateArgs),
}

#[derive(clap::Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
pub struct EigenArgs {
    /// Dimensionless coupling (>= 0)
    #[arg(long)]
    pub chi: Option<f64>,
    /// Dimensionless pump-probe detuning
    #[arg(long)]
    pub delta: Option<f64>,
    /// JSON file of laboratory parameters; replaces --chi/--delta
    #[arg(long, value_name = "PATH", conflicts_with_all = ["chi", "delta"])]
    pub physical: Option<PathBuf>,
    /// Also write the report as a one-row CSV file
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
pub struct EvolveArgs {
    /// Dimensionless coupling (>= 0)
    #[arg(long)]
    pub chi: Option<f64>,
    /// Dimensionless pump-probe detuning
    #[arg(long)]
    pub delta: Option<f64>,
    /// JSON file of laboratory parameters; replaces --chi/--delta
    #[arg(long, value_name = "PATH", conflicts_with_all = ["chi", "delta"])]
    pub physical: Option<PathBuf>,
    /// Real part of the injected probe amplitude (default 0)
    #[arg(long)]
    pub alpha_re: Option<f64>,
    /// Imaginary part of the injected probe amplitude (default 0)
    #[arg(long)]
    pub alpha_im: Option<f64>,
    /// Last time on the grid (the grid always starts at 0)
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Number of grid times including both ends (>= 2, default 101)
    #[arg(long)]
    pub tau_points: Option<usize>,
    /// Condensate atom number entering bunching and depletion (default 1e4)
    #[arg(long)]
    pub atom_count: Option<f64>,
    /// Use the single-branch large-time propagator instead of the exact one
    #[arg(long)]
    pub asymptotic: bool,
    /// Write CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write an SVG line plot of the intensities
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// Swept parameter: chi, delta, alpha_re, or alpha_im
    #[arg(long)]
    pub param: Option<String>,
    /// First swept value
    #[arg(long)]
    pub lo: Option<f64>,
    /// Last swept value
    #[arg(long)]
    pub hi: Option<f64>,
    /// Number of swept points (>= 1)
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time at which every point is evaluated
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Dimensionless coupling, required unless it is the swept parameter
    #[arg(long)]
    pub chi: Option<f64>,
    /// Dimensionless detuning, required unless it is the swept parameter
    #[arg(long)]
    pub delta: Option<f64>,
    /// Real part of the probe amplitude (default 0)
    #[arg(long)]
    pub alpha_re: Option<f64>,
    /// Imaginary part of the probe amplitude (default 0)
    #[arg(long)]
    pub alpha_im: Option<f64>,
    /// Condensate atom number entering bunching and depletion (default 1e4)
    #[arg(long)]
    pub atom_count: Option<f64>,
    /// Write CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write an SVG line plot of the intensities
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
pub struct MapArgs {
    /// Smallest coupling on the grid (default 0)
    #[arg(long)]
    pub chi_lo: Option<f64>,
    /// Largest coupling on the grid (default 1)
    #[arg(long)]
    pub chi_hi: Option<f64>,
    /// Number of coupling grid points (default 11)
    #[arg(long)]
    pub chi_steps: Option<usize>,
    /// Smallest detuning on the grid (default -4)
    #[arg(long)]
    pub delta_lo: Option<f64>,
    /// Largest detuning on the grid (default 4)
    #[arg(long)]
    pub delta_hi: Option<f64>,
    /// Number of detuning grid points (default 41)
    #[arg(long)]
    pub delta_steps: Option<usize>,
    /// Write CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Default)]
pub struct ValidateArgs {
    /// Smaller grid at fixed cutoffs: seconds instead of a minute
    #[arg(long)]
    pub quick: bool,
}

/// Flat JSON mirror of every option; unknown keys are rejected so typos
/// cannot silently fall back to defaults.
#[derive(serde::Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub chi: Option<f64>,
    pub delta: Option<f64>,
    pub alpha_re: Option<f64>,
    pub alpha_im: Option<f64>,
    pub physical: Option<String>,
    pub tau_max: Option<f64>,
    pub tau_points: Option<usize>,
    pub atom_count: Option<f64>,
    pub asymptotic: Option<bool>,
    pub param: Option<String>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub steps: Option<usize>,
    pub chi_lo: Option<f64>,
    pub chi_hi: Option<f64>,
    pub chi_steps: Option<usize>,
    pub delta_lo: Option<f64>,
    pub delta_hi: Option<f64>,
    pub delta_steps: Option<usize>,
    pub quick: Option<bool>,
    pub out: Option<String>,
    pub svg: Option<String>,
}

/// Laboratory parameters as stored on disk; the complex pump Rabi frequency
/// is split into its real and imaginary parts.
#[derive(serde::Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct PhysicalFile {
    dipole_moment: f64,
    cavity_length: f64,
    mode_cross_section: f64,
    detuning: f64,
    pump_rabi_re: f64,
    pump_rabi_im: f64,
    pump_frequency: f64,
    probe_wavenumber: f64,
    pump_wavenumber: f64,
    atom_count: f64,
    atom_mass: f64,
}

/// The model point a command runs at, plus the laboratory scales when the
/// point came from a physical-parameter file.
#[derive(Debug, Clone, Copy)]
pub struct ModelInput {
    pub model: ModelParams,
    pub derived: Option<DerivedModel>,
    pub atom_count: f64,
}

#[derive(Debug)]
pub struct EigenConfig {
    pub input: ModelInput,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct EvolveConfig {
    pub input: ModelInput,
    pub tau_max: f64,
    pub tau_points: usize,
    pub asymptotic: bool,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Chi,
    Delta,
    AlphaRe,
    AlphaIm,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Chi => "chi",
            SweepParam::Delta => "delta",
            SweepParam::AlphaRe => "alpha_re",
            SweepParam::AlphaIm => "alpha_im",
        }
    }

    fn parse(text: &str) -> CliResult<Self> {
        match text {
            "chi" => Ok(SweepParam::Chi),
            "delta" => Ok(SweepParam::Delta),
            "alpha_re" => Ok(SweepParam::AlphaRe),
            "alpha_im" => Ok(SweepParam::AlphaIm),
            other => Err(Failure::usage(format!(
                "unknown sweep parameter `{other}` (expected chi, delta, alpha_re, or alpha_im)"
            ))),
        }
    }
}

#[derive(Debug)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub base_chi: f64,
    pub base_delta: f64,
    pub base_alpha: C64,
    pub tau_max: f64,
    pub atom_count: f64,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl SweepConfig {
    /// The swept value at grid index `k`.
    pub fn value_at(&self, k: usize) -> f64 {
        grid_value(self.lo, self.hi, self.steps, k)
    }

    /// The model with the swept parameter replaced by `value`.
    pub fn model_at(&self, value: f64) -> carl_core::Result<ModelParams> {
        let (mut chi, mut delta, mut alpha) = (self.base_chi, self.base_delta, self.base_alpha);
        match self.param {
            SweepParam::Chi => chi = value,
            SweepParam::Delta => delta = value,
            SweepParam::AlphaRe => alpha.re = value,
            SweepParam::AlphaIm => alpha.im = value,
        }
        ModelParams::new(chi, delta, alpha)
    }
}

#[derive(Debug)]
pub struct MapConfig {
    pub chi_lo: f64,
    pub chi_hi: f64,
    pub chi_steps: usize,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub delta_steps: usize,
    pub out: Option<PathBuf>,
}

impl MapConfig {
    pub fn chi_at(&self, i: usize) -> f64 {
        grid_value(self.chi_lo, self.chi_hi, self.chi_steps, i)
    }

    pub fn delta_at(&self, j: usize) -> f64 {
        grid_value(self.delta_lo, self.delta_hi, self.delta_steps, j)
    }
}

#[derive(Debug)]
pub struct ValidateConfig {
    pub quick: bool,
}

#[derive(Debug)]
pub enum ResolvedCommand {
    Eigen(EigenConfig),
    Evolve(EvolveConfig),
    Sweep(SweepConfig),
    Map(MapConfig),
    Validate(ValidateConfig),
}

/// Uniform grid over `[lo, hi]` with `steps` points; a single point sits at
/// `lo`.
pub fn grid_value(lo: f64, hi: f64, steps: usize, k: usize) -> f64 {
    if steps <= 1 {
        lo
    } else {
        lo + (hi - lo) * k as f64 / (steps - 1) as f64
    }
}

pub const DEFAULT_ATOM_COUNT: f64 = 1e4;
pub const DEFAULT_TAU_POINTS: usize = 101;

fn load_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("config file {}: {e}", path.display())))
}

fn load_physical(path: &Path) -> CliResult<(PhysicalParams, DerivedModel)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::usage(format!("cannot read physical file {}: {e}", path.display()))
    })?;
    let raw: PhysicalFile = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("physical file {}: {e}", path.display())))?;
    let phys = PhysicalParams {
        dipole_moment: raw.dipole_moment,
        cavity_length: raw.cavity_length,
        mode_cross_section: raw.mode_cross_section,
        detuning: raw.detuning,
        pump_rabi: C64::new(raw.pump_rabi_re, raw.pump_rabi_im),
        pump_frequency: raw.pump_frequency,
        probe_wavenumber: raw.probe_wavenumber,
        pump_wavenumber: raw.pump_wavenumber,
        atom_count: raw.atom_count,
        atom_mass: raw.atom_mass,
    };
    let derived = derive_model(&phys)?;
    Ok((phys, derived))
}

fn require<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        Failure::usage(format!(
            "missing required `--{}` (config key `{key}`)",
            key.replace('_', "-")
        ))
    })
}

/// Resolves the model point shared by eigen and evolve: either explicit
/// `(chi, delta)` or a physical-parameter file, never both. Whichever source
/// the command line names wins outright; the config file only decides when
/// the command line names neither.
fn resolve_model_input(
    chi: Option<f64>,
    delta: Option<f64>,
    physical: Option<PathBuf>,
    alpha: C64,
    atom_count: Option<f64>,
    file: &FileConfig,
) -> CliResult<ModelInput> {
    let physical = if chi.is_some() || delta.is_some() {
        None
    } else if physical.is_some() {
        physical
    } else {
        let from_file = file.physical.as_ref().map(PathBuf::from);
        if from_file.is_some() && (file.chi.is_some() || file.delta.is_some()) {
            return Err(Failure::usage(
                "config file sets both `physical` and `chi`/`delta`; keep one source",
            ));
        }
        from_file
    };

    if let Some(path) = physical {
        let (phys, derived) = load_physical(&path)?;
        let model = ModelParams::new(derived.chi, derived.delta, alpha)?;
        Ok(ModelInput {
            model,
            derived: Some(derived),
            atom_count: atom_count.unwrap_or(phys.atom_count),
        })
    } else {
        let chi = require(chi.or(file.chi), "chi")?;
        let delta = require(delta.or(file.delta), "delta")?;
        let model = ModelParams::new(chi, delta, alpha)?;
        Ok(ModelInput {
            model,
            derived: None,
            atom_count: atom_count.unwrap_or(DEFAULT_ATOM_COUNT),
        })
    }
}

fn command_from_name(name: &str) -> CliResult<CommandArgs> {
    match name {
        "eigen" => Ok(CommandArgs::Eigen(EigenArgs::default())),
        "evolve" => Ok(CommandArgs::Evolve(EvolveArgs::default())),
        "sweep" => Ok(CommandArgs::Sweep(SweepArgs::default())),
        "map" => Ok(CommandArgs::Map(MapArgs::default())),
        "validate" => Ok(CommandArgs::Validate(ValidateArgs::default())),
        other => Err(Failure::usage(format!("unknown command `{other}` in config file"))),
    }
}

/// Merges flags, config file, and defaults into one validated run plan.
pub fn resolve(cli: Cli) -> CliResult<ResolvedCommand> {
    let file = match &cli.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let command = match cli.command {
        Some(c) => c,
        None => match &file.command {
            Some(name) => command_from_name(name)?,
            None => {
                return Err(Failure::usage(
                    "no command given (pass a subcommand or a config file with a `command` key)",
                ))
            }
        },
    };

    match command {
        CommandArgs::Eigen(args) => {
            let input = resolve_model_input(
                args.chi,
                args.delta,
                args.physical,
                C64::new(0.0, 0.0),
                None,
                &file,
            )?;
            let out = args.out.or_else(|| file.out.as_ref().map(PathBuf::from));
            Ok(ResolvedCommand::Eigen(EigenConfig { input, out }))
        }
        CommandArgs::Evolve(args) => {
            let alpha = C64::new(
                args.alpha_re.or(file.alpha_re).unwrap_or(0.0),
                args.alpha_im.or(file.alpha_im).unwrap_or(0.0),
            );
            let atom_count = args.atom_count.or(file.atom_count);
            let input = resolve_model_input(
                args.chi,
                args.delta,
                args.physical,
                alpha,
                atom_count,
                &file,
            )?;
            let tau_max = require(args.tau_max.or(file.tau_max), "tau_max")?;
            if !(tau_max >= 0.0) || !tau_max.is_finite() {
                return Err(Failure::usage("tau_max must be finite and >= 0"));
            }
            let tau_points = args
                .tau_points
                .or(file.tau_points)
                .unwrap_or(DEFAULT_TAU_POINTS);
            if tau_points < 2 {
                return Err(Failure::usage("tau_points must be >= 2"));
            }
            Ok(ResolvedCommand::Evolve(EvolveConfig {
                input,
                tau_max,
                tau_points,
                asymptotic: args.asymptotic || file.asymptotic.unwrap_or(false),
                out: args.out.or_else(|| file.out.as_ref().map(PathBuf::from)),
                svg: args.svg.or_else(|| file.svg.as_ref().map(PathBuf::from)),
            }))
        }
        CommandArgs::Sweep(args) => {
            let param = SweepParam::parse(&require(args.param.or_else(|| file.param.clone()), "param")?)?;
            let lo = require(args.lo.or(file.lo), "lo")?;
            let hi = require(args.hi.or(file.hi), "hi")?;
            let steps = require(args.steps.or(file.steps), "steps")?;
            if steps < 1 {
                return Err(Failure::usage("steps must be >= 1"));
            }
            let tau_max = require(args.tau_max.or(file.tau_max), "tau_max")?;
            if !(tau_max >= 0.0) || !tau_max.is_finite() {
                return Err(Failure::usage("tau_max must be finite and >= 0"));
            }

            let chi = args.chi.or(file.chi);
            let delta = args.delta.or(file.delta);
            let alpha_re = args.alpha_re.or(file.alpha_re);
            let alpha_im = args.alpha_im.or(file.alpha_im);
            let fixed = |v: Option<f64>, key: &str, swept: SweepParam| -> CliResult<f64> {
                if param == swept {
                    if v.is_some() {
                        return Err(Failure::usage(format!(
                            "`--{key}` conflicts with sweeping `{key}`"
                        )));
                    }
                    // Placeholder; model_at substitutes the swept value.
                    Ok(0.0)
                } else if matches!(swept, SweepParam::AlphaRe | SweepParam::AlphaIm) {
                    Ok(v.unwrap_or(0.0))
                } else {
                    require(v, key)
                }
            };
            let base_chi = fixed(chi, "chi", SweepParam::Chi)?;
            let base_delta = fixed(delta, "delta", SweepParam::Delta)?;
            let base_alpha = C64::new(
                fixed(alpha_re, "alpha_re", SweepParam::AlphaRe)?,
                fixed(alpha_im, "alpha_im", SweepParam::AlphaIm)?,
            );
            Ok(ResolvedCommand::Sweep(SweepConfig {
                param,
                lo,
                hi,
                steps,
                base_chi,
                base_delta,
                base_alpha,
                tau_max,
                atom_count: args
                    .atom_count
                    .or(file.atom_count)
                    .unwrap_or(DEFAULT_ATOM_COUNT),
                out: args.out.or_else(|| file.out.as_ref().map(PathBuf::from)),
                svg: args.svg.or_else(|| file.svg.as_ref().map(PathBuf::from)),
            }))
        }
        CommandArgs::Map(args) => {
            let cfg = MapConfig {
                chi_lo: args.chi_lo.or(file.chi_lo).unwrap_or(0.0),
                chi_hi: args.chi_hi.or(file.chi_hi).unwrap_or(1.0),
                chi_steps: args.chi_steps.or(file.chi_steps).unwrap_or(11),
                delta_lo: args.delta_lo.or(file.delta_lo).unwrap_or(-4.0),
                delta_hi: args.delta_hi.or(file.delta_hi).unwrap_or(4.0),
                delta_steps: args.delta_steps.or(file.delta_steps).unwrap_or(41),
                out: args.out.or_else(|| file.out.as_ref().map(PathBuf::from)),
            };
            if cfg.chi_steps < 1 || cfg.delta_steps < 1 {
                return Err(Failure::usage("grid steps must be >= 1"));
            }
            if !(cfg.chi_lo >= 0.0) {
                return Err(Failure::usage("chi_lo must be >= 0"));
            }
            if cfg.chi_hi < cfg.chi_lo || cfg.delta_hi < cfg.delta_lo {
                return Err(Failure::usage("grid upper bounds must not be below lower bounds"));
            }
            Ok(ResolvedCommand::Map(cfg))
        }
        CommandArgs::Validate(args) => Ok(ResolvedCommand::Validate(ValidateConfig {
            quick: args.quick || file.quick.unwrap_or(false),
        })),
    }
}
