//! `facesketch synth`: self-contained demo inputs.

use clap::Args;
use facesketch::fit::{synthetic_coeffs, synthetic_target, wrinkle_displacement, SyntheticSpec};
use facesketch::io::{save_basis, write_png};
use facesketch::render::Variant;
use facesketch::uv::{UvAtlas, UV_SIZE};
use serde::Serialize;

use crate::artifacts::{basis_or_default, create_dir, write_json, LandmarksFile};
use crate::config::RunConfig;
use crate::Failure;

#[derive(Args)]
pub struct SynthArgs {
    /// Seed of the ground-truth coefficients.
    #[arg(long, default_value_t = 1)]
    pub face_seed: u64,
    /// Amplitude of a synthetic wrinkle displacement field; 0 for none.
    #[arg(long, default_value_t = 0.0)]
    pub wrinkles: f64,
}

#[derive(Serialize)]
struct Truth<'a> {
    beta_id: &'a [f64],
    beta_exp: &'a [f64],
    beta_alb: &'a [f64],
    beta_a: [f64; 3],
    beta_t: [f64; 3],
    beta_sh: &'a [f64],
    beta_d: f64,
}

/// Writes `basis.s2fb`, `sketch.png` (detail texture variant in
/// `sketch.style`), `photo.png` (coarse texture variant), `landmarks.json`
/// and `truth.json` into `out_dir`.
pub fn run(args: &SynthArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let fit_cfg = cfg.fit_config().map_err(Failure::input)?;
    let build = || -> anyhow::Result<()> {
        let basis = basis_or_default(None)?;
        let atlas = UvAtlas::new(&basis, UV_SIZE)?;
        let mut truth = synthetic_coeffs(&basis, &fit_cfg, &SyntheticSpec::default(), args.face_seed);
        if args.wrinkles != 0.0 {
            truth.disp_grid = wrinkle_displacement(args.face_seed, args.wrinkles);
        }
        let target = synthetic_target(&basis, &atlas, &truth, &fit_cfg)?;
        let out = &cfg.out_dir;
        create_dir(out)?;
        save_basis(out.join("basis.s2fb"), &basis)?;
        write_png(out.join("sketch.png"), &target.supervision.sketch.pixels)?;
        write_png(out.join("photo.png"), &target.variants[Variant::CoarseTexture.index()])?;
        let landmarks = target.supervision.landmarks.as_ref().expect("synthetic targets carry landmarks");
        write_json(&out.join("landmarks.json"), &LandmarksFile::from_targets(landmarks))?;
        let c = &truth;
        write_json(
            &out.join("truth.json"),
            &Truth {
                beta_id: &c.beta_id,
                beta_exp: &c.beta_exp,
                beta_alb: &c.beta_alb,
                beta_a: c.beta_a,
                beta_t: c.beta_t,
                beta_sh: &c.beta_sh,
                beta_d: c.beta_d,
            },
        )?;
        Ok(())
    };
    build().map_err(Failure::other)
}
