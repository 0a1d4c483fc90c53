//! `surfloss` command-line front end.
//!
//! Every artifact starts with a comment header holding the tool version,
//! the command line (without `--out`) and the seed.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use output::Output;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] surfloss::Error),
}

impl CliError {
    /// 2 missing input or usage, 3 malformed or invalid input, 4 numerical
    /// failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use surfloss::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
                E::Io { .. } => 1,
                E::Parse { .. } | E::Invalid { .. } | E::Missing(_) => 3,
                E::Degenerate(_) | E::Singular { .. } | E::NonConvergence { .. } | E::TooLarge { .. } => 4,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "surfloss", version, about = "Surface-loss budgeting for transmon qubits")]
pub struct Cli {
    /// Master seed of every randomized step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Cross-section grid refinement.
    #[arg(long, global = true, value_enum, default_value_t = ResolutionArg::Medium)]
    pub resolution: ResolutionArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResolutionArg {
    Coarse,
    Medium,
    Fine,
}

impl From<ResolutionArg> for surfloss::fields::Resolution {
    fn from(r: ResolutionArg) -> Self {
        use surfloss::fields::Resolution;
        match r {
            ResolutionArg::Coarse => Resolution::Coarse,
            ResolutionArg::Medium => Resolution::Medium,
            ResolutionArg::Fine => Resolution::Fine,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Participation ratios of bundled or user designs, or a parameter sweep.
    Participation(ParticipationArgs),
    /// TLS-bath simulation of Q spectra.
    TlsSim(TlsSimArgs),
    /// Loss tangents from participations and Q statistics.
    Extract(ExtractArgs),
    /// Predicted against measured Q.
    Predict(PredictArgs),
    /// T1 fitting, masking and statistics of Q spectra.
    #[command(subcommand)]
    Spectrum(SpectrumCommand),
    /// Six-qubit comparison plus simulation and extraction, as markdown.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ParticipationArgs {
    /// Bundled designs (comma separated); all three when no design is given.
    #[arg(long, value_delimiter = ',', conflicts_with = "design")]
    pub builtin: Vec<String>,
    /// Design JSON file.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Emit the published interface table instead of computing.
    #[arg(long, conflicts_with_all = ["field_map", "compute"])]
    pub reference: bool,
    /// Surface field map CSV to use instead of the bundled one.
    #[arg(long)]
    pub field_map: Option<PathBuf>,
    /// Use the built-in coarse solver and freshly computed scaling factors.
    #[arg(long, conflicts_with = "field_map")]
    pub compute: bool,
    /// Parameter sweep, e.g. `--sweep gap 60:160:10`.
    #[arg(long, num_args = 2, value_names = ["PARAM", "START:STOP:STEP"], conflicts_with = "reference")]
    pub sweep: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    Aligned,
    Isotropic,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Bundled designs to simulate.
    #[arg(long, value_delimiter = ',', default_values_t = ["long".to_string(), "regular".to_string(), "wide".to_string()])]
    pub designs: Vec<String>,
    /// Independent defect ensembles per design.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// TLS density, (μm³·GHz)⁻¹.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, value_enum, default_value_t = OrientationArg::Aligned)]
    pub orientation: OrientationArg,
}

#[derive(Debug, Args)]
pub struct TlsSimArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also write the first defect ensemble of each design.
    #[arg(long)]
    pub dump_ensemble: bool,
    #[command(flatten)]
    pub mask: MaskArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unconstrained,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Unweighted,
    InverseVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    LiftOff,
    Etch,
    Simulated,
}

impl From<ProcessArg> for surfloss::geometry::Process {
    fn from(p: ProcessArg) -> Self {
        use surfloss::geometry::Process;
        match p {
            ProcessArg::LiftOff => Process::LiftOff,
            ProcessArg::Etch => Process::Etch,
            ProcessArg::Simulated => Process::Simulated,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Unconstrained)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_samples: u64,
    #[arg(long, value_enum, default_value_t = WeightingArg::Unweighted)]
    pub weighting: WeightingArg,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Participation CSV (`design,element,interface,p`).
    #[arg(long)]
    pub participation: PathBuf,
    /// Q statistics CSV (`label,median,std,count`), labels matching the designs.
    #[arg(long)]
    pub qstats: PathBuf,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Process label written with the estimates.
    #[arg(long, value_enum, default_value_t = ProcessArg::Simulated)]
    pub process: ProcessArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Use the bundled participations, tangents and medians.
    #[arg(long, conflicts_with_all = ["participation", "estimates", "measured"])]
    pub reference: bool,
    #[arg(long, required_unless_present = "reference")]
    pub participation: Option<PathBuf>,
    /// Estimates CSV (`element,tan_delta,ci68_halfwidth,process`).
    #[arg(long, required_unless_present = "reference")]
    pub estimates: Option<PathBuf>,
    /// Measured qubits CSV (`qubit,design,process,median,std`).
    #[arg(long, required_unless_present = "reference")]
    pub measured: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    /// Drop points whose relative T1 error exceeds this.
    #[arg(long, default_value_t = surfloss::spectra::DEFAULT_ERROR_THRESHOLD)]
    pub err_threshold: f64,
    /// Dip depth threshold in MADs of 1/Q.
    #[arg(long, default_value_t = 3.0)]
    pub depth_mad: f64,
    /// Minimum fitted dip FWHM in grid steps.
    #[arg(long, default_value_t = 3.0)]
    pub min_width_bins: f64,
    /// Running median window in points.
    #[arg(long, default_value_t = 101)]
    pub window_bins: usize,
}

impl MaskArgs {
    pub fn dip_params(&self) -> surfloss::spectra::DipParams {
        surfloss::spectra::DipParams {
            depth_mad: self.depth_mad,
            min_width_bins: self.min_width_bins,
            window_bins: self.window_bins,
            ..Default::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SpectrumCommand {
    /// Fits T1 at every frequency of a T1 CSV and writes the Q spectrum.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Flags high-error points and parasitic dips.
    Mask {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        mask: MaskArgs,
    },
    /// Median and spread of the kept points.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Label of the statistics row; defaults to the file stem.
        #[arg(long)]
        label: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// paths written.
pub fn run<I, T>(args: I) -> CliResult<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli, &args)
}

/// Runs an already parsed command line; `args` go into artifact headers.
pub fn execute(cli: &Cli, args: &[std::ffi::OsString]) -> CliResult<Vec<PathBuf>> {
    let mut out = Output::new(&cli.out, args, cli.seed)?;
    commands::dispatch(cli, &mut out)?;
    Ok(out.written().to_vec())
}
