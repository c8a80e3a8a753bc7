//! `screenmark` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, input or codec error, 2 localization
//! failure, 3 failure writing an output.

mod commands;
mod config;
mod evaluate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use screenmark::anticrop::Edge;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read input: {0}")]
    Input(String),
    #[error(transparent)]
    Codec(#[from] screenmark::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Codec(screenmark::Error::LocalizationFailed { .. }) => 2,
            CliError::Output(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "screenmark", version, about = "Screen-shooting robust watermarking toolkit")]
struct Cli {
    /// TOML file with [channel], [embed] and [locate] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed a 127-bit payload into a host image.
    Embed(EmbedArgs),
    /// Run the simulated screen-shooting channel on an image.
    Attack(AttackArgs),
    /// Find the displayed picture in a capture and rectify it.
    Locate(LocateArgs),
    /// Decode the payload from a rectified or cropped image.
    Extract(ExtractArgs),
    /// Find complete sub-images in a cropped image.
    Recover(RecoverArgs),
    /// Compute the JND map of an image.
    JndMap(JndArgs),
    /// Run an experiment grid over a corpus.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub host: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// 64-bit key in hex.
    #[arg(long, value_parser = config::parse_key)]
    pub key: u64,
    /// 32 hex digits with the top bit clear.
    #[arg(long)]
    pub payload: Option<String>,
    /// File holding 127 `0`/`1` characters.
    #[arg(long)]
    pub payload_file: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub gain: Option<f64>,
    #[arg(long)]
    pub template_amplitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Where to write the distortion trace (JSON).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Re-run a recorded trace instead of sampling a new one.
    #[arg(long, conflicts_with_all = ["seed", "step", "zero", "moire_only"])]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Schedule step; ramps and the Moiré gate depend on it.
    #[arg(long)]
    pub step: Option<u64>,
    /// Identity channel.
    #[arg(long, conflicts_with = "moire_only")]
    pub zero: bool,
    /// Only the Moiré stage.
    #[arg(long)]
    pub moire_only: bool,
}

#[derive(Debug, Args)]
pub struct LocateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Where to write the detected quad and homography (JSON).
    #[arg(long)]
    pub quad: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_parser = config::parse_key)]
    pub key: u64,
    /// Recover sub-images by symmetry before decoding.
    #[arg(long)]
    pub anticrop: bool,
    /// Resize to the full frame when the size does not match.
    #[arg(long, conflicts_with = "anticrop")]
    pub resize: bool,
    /// Known payload (hex); adds the BER to the report.
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long)]
    pub truth_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory for the recovered sub-images.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JndArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Normalized preview PNG.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Raw float map (JNDF format).
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Experiment description (TOML); flags below override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Directory of PNG hosts; the bundled synthetic corpus is used otherwise.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Size of the synthetic corpus.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Crop ratios, each applied at `--edge`.
    #[arg(long, value_delimiter = ',')]
    pub crops: Option<Vec<f64>>,
    #[arg(long, default_value = "left")]
    pub edge: Edge,
    #[arg(long, value_parser = config::parse_key)]
    pub key: Option<u64>,
    /// Output directory for report.csv, timings.csv and summary.json.
    #[arg(long, short)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (SCREENMARK_THREADS takes precedence).
    #[arg(long)]
    pub workers: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Embed(a) => commands::embed(&a, &file),
        Command::Attack(a) => commands::attack(&a, &file),
        Command::Locate(a) => commands::locate(&a, &file),
        Command::Extract(a) => commands::extract(&a, &file),
        Command::Recover(a) => commands::recover(&a, &file),
        Command::JndMap(a) => commands::jnd(&a),
        Command::Evaluate(a) => evaluate::run(&a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let name = match &e {
                CliError::Codec(inner) => format!(" ({})", variant_name(inner)),
                _ => String::new(),
            };
            eprintln!("error{name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Debug name of the error variant, e.g. `PayloadLengthMismatch`.
pub(crate) fn variant_name(e: &screenmark::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}
