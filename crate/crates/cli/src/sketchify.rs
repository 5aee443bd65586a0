//! `facesketch sketchify`.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use facesketch::io::{fit_square, read_rgb, write_png};
use facesketch::sketch::{phi_sketch, SketchStyle};

use crate::config::RunConfig;
use crate::Failure;

#[derive(Args)]
pub struct SketchifyArgs {
    /// RGB input image.
    #[arg(long)]
    pub image: PathBuf,
    /// `line` or `shading`; defaults to `sketch.style`.
    #[arg(long)]
    pub style: Option<String>,
    /// Output PNG path.
    #[arg(long)]
    pub out: PathBuf,
    /// Normalize to a black-padded square of this size first.
    #[arg(long)]
    pub size: Option<usize>,
}

pub fn run(args: &SketchifyArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let style: SketchStyle = match &args.style {
        Some(s) => s.parse().map_err(Failure::input)?,
        None => cfg.style,
    };
    cfg.sketch.validate().map_err(Failure::input)?;
    let mut img = read_rgb(&args.image)
        .with_context(|| format!("reading {}", args.image.display()))
        .map_err(Failure::input)?;
    if let Some(size) = args.size {
        img = fit_square(&img, size, 0.0);
    }
    let sketch = phi_sketch(&img, style, &cfg.sketch);
    write_png(&args.out, &sketch.pixels).map_err(Failure::other)?;
    Ok(())
}
