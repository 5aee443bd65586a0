//! `facesketch`: fit faces to sketches, texture them, make sketches, and
//! check the toolkit's invariants.

mod artifacts;
mod config;
mod fit;
mod selfcheck;
mod sketchify;
mod synth;
mod texture;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "facesketch",
    version,
    about = "Reconstruct detailed 3D faces from sketches",
    after_help = "Any RunConfig key can be overridden as --key=value, e.g. --fit.iters_a=100 --loss.lmk=1e-2.\n\
                  The FACESKETCH_OUT_DIR environment variable overrides out_dir."
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the face model to a sketch and write meshes, renders and metrics.
    Fit(fit::FitArgs),
    /// Pick a library texture for a prompt and fuse it onto a prior fit.
    Texture(texture::TextureArgs),
    /// Turn an image into a sketch.
    Sketchify(sketchify::SketchifyArgs),
    /// Run the invariant suite and report each check.
    Selfcheck(selfcheck::SelfcheckArgs),
    /// Write a synthetic basis with a rendered sketch, photograph and landmarks.
    Synth(synth::SynthArgs),
}

/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input; nothing is written.
    Input(anyhow::Error),
    /// The fit diverged; partial artifacts are on disk.
    Diverged(anyhow::Error),
    /// A built-in check did not hold.
    Check(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    pub fn input(e: impl Into<anyhow::Error>) -> Failure {
        Failure::Input(e.into())
    }

    pub fn other(e: impl Into<anyhow::Error>) -> Failure {
        Failure::Other(e.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Diverged(_) => 3,
            Failure::Check(_) | Failure::Other(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Diverged(e) | Failure::Check(e) | Failure::Other(e) => e,
        }
    }
}

/// Splits `--key=value` configuration overrides from the clap arguments.
/// Config keys are dotted, or one of `seed` and `out_dir`.
/// Returns the clap arguments and the overrides.
fn split_overrides(args: impl IntoIterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let (overrides, rest) = args.into_iter().partition(|a| {
        let Some(body) = a.strip_prefix("--") else { return false };
        let key = body.split('=').next().unwrap_or("");
        body.contains('=') && (key.contains('.') || key == "seed" || key == "out_dir")
    });
    (rest, overrides)
}

fn run() -> Result<(), Failure> {
    let (args, overrides) = split_overrides(std::env::args());
    let Cli { common, command } = Cli::parse_from(args);
    let cfg = RunConfig::load(common.config.as_deref(), &overrides).map_err(Failure::input)?;
    match command {
        Command::Fit(a) => fit::run(&a, &cfg),
        Command::Texture(a) => texture::run(&a, &cfg),
        Command::Sketchify(a) => sketchify::run(&a, &cfg),
        Command::Selfcheck(a) => selfcheck::run(&a),
        Command::Synth(a) => synth::run(&a, &cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
