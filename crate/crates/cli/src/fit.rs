//! `facesketch fit`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use facesketch::fit::{fit, mean_landmark_error, Evaluator, FitConfig, FitResult, Stage};
use facesketch::io::{encode_obj, fit_square, read_gray, read_rgb, write_atomic, write_png};
use facesketch::model::{FaceBasis, Mesh};
use facesketch::objective::{LossBreakdown, Supervision};
use facesketch::render::Variant;
use facesketch::sketch::SketchImage;
use facesketch::uv::{UvAtlas, UvMap, UvSemantic, UV_SIZE};
use facesketch::Error;
use serde::Serialize;

use crate::artifacts::{basis_or_default, create_dir, read_landmarks, write_history, write_json};
use crate::config::RunConfig;
use crate::Failure;

#[derive(Args)]
pub struct FitArgs {
    /// Sketch image; normalized to a white-padded square of `camera.size`.
    #[arg(long)]
    pub sketch: PathBuf,
    /// Basis container; the built-in synthetic basis when omitted.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Optional RGB photograph for the photometric and perception terms.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Optional landmark JSON in the sketch's pixel frame.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
}

/// File names written by a successful fit, in write order.
pub const FIT_ARTIFACTS: [&str; 10] = [
    "coarse.obj",
    "detail.obj",
    "displacement.uv",
    "displacement.png",
    "render_a.png",
    "render_b.png",
    "render_c.png",
    "render_d.png",
    "history.jsonl",
    "summary.json",
];

#[derive(Serialize)]
struct Coefficients<'a> {
    beta_id: &'a [f64],
    beta_exp: &'a [f64],
    beta_alb: &'a [f64],
    beta_a: [f64; 3],
    beta_t: [f64; 3],
    beta_sh: &'a [f64],
    beta_d: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    tool: &'static str,
    version: &'static str,
    config: serde_json::Map<String, serde_json::Value>,
    inputs: serde_json::Value,
    vertices: usize,
    triangles: usize,
    iterations: [usize; 3],
    initial_loss: &'a LossBreakdown,
    final_loss: &'a LossBreakdown,
    landmark_error_px: Option<f64>,
    max_displacement: f64,
    coefficients: Coefficients<'a>,
    mask_coverage: f64,
    marching_updates: usize,
    skipped_steps: usize,
    zero_feature_iterations: usize,
    no_landmark_iterations: usize,
    artifacts: Vec<&'static str>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

struct Inputs {
    basis: FaceBasis,
    supervision: Supervision,
}

fn load_inputs(args: &FitArgs, cfg: &RunConfig) -> anyhow::Result<Inputs> {
    let size = cfg.size;
    let raw = read_gray(&args.sketch).with_context(|| format!("reading sketch {}", args.sketch.display()))?;
    let sketch = SketchImage {
        pixels: fit_square(&raw, size, 1.0),
        style: cfg.style,
    };
    let mut supervision = Supervision::from_sketch(sketch);
    if let Some(p) = &args.image {
        let img = read_rgb(p).with_context(|| format!("reading image {}", p.display()))?;
        supervision.image = Some(fit_square(&img, size, 0.0));
    }
    if let Some(p) = &args.landmarks {
        supervision.landmarks = Some(read_landmarks(p, raw.width, raw.height, size)?);
    }
    supervision.validate()?;
    let basis = basis_or_default(args.basis.as_deref())?;
    Ok(Inputs { basis, supervision })
}

fn mesh_obj(mesh: &Mesh, basis: &FaceBasis) -> anyhow::Result<Vec<u8>> {
    Ok(encode_obj(&mesh.vertices, &mesh.triangles, Some(&basis.uv_coords), None)?.into_bytes())
}

fn write_outputs(
    out: &Path,
    args: &FitArgs,
    cfg: &RunConfig,
    fit_cfg: &FitConfig,
    inputs: &Inputs,
    atlas: &UvAtlas,
    result: &FitResult,
) -> anyhow::Result<()> {
    let basis = &inputs.basis;
    write_atomic(out.join("coarse.obj"), &mesh_obj(&result.coarse, basis)?)?;
    write_atomic(out.join("detail.obj"), &mesh_obj(&result.detail, basis)?)?;

    let mut disp = UvMap::new(UV_SIZE, 1, UvSemantic::Scalar);
    disp.values.data.clone_from(&result.coeffs.disp_grid);
    for (v, t) in disp.validity.iter_mut().zip(&atlas.texels) {
        *v = f64::from(u8::from(t.is_some()));
    }
    let mut raw = Vec::new();
    disp.write_raw(&mut raw)?;
    write_atomic(out.join("displacement.uv"), &raw)?;
    write_png(out.join("displacement.png"), &disp.preview())?;

    let eval = Evaluator::new(basis, atlas, &inputs.supervision, fit_cfg)?;
    let scene = eval.scene(&result.coeffs, Stage::Joint)?;
    let ev = eval.evaluate(&result.coeffs, &scene, Stage::Joint, &result.landmark_indices, false)?;
    for v in Variant::ALL {
        write_png(out.join(format!("render_{}.png", v.letter())), &ev.images[v.index()])?;
    }
    write_history(&out.join("history.jsonl"), &result.history, cfg.iters)?;

    let landmark_error_px = inputs.supervision.landmarks.as_ref().and_then(|t| {
        let pts: Vec<_> = result.landmark_indices.iter().map(|&v| scene.projection.points[v as usize]).collect();
        mean_landmark_error(&pts, t)
    });
    let c = &result.coeffs;
    let config = cfg
        .pairs()
        .into_iter()
        .map(|(k, v)| (k, serde_json::Value::String(v)))
        .collect();
    let d = &result.diagnostics;
    let summary = Summary {
        tool: "facesketch",
        version: env!("CARGO_PKG_VERSION"),
        config,
        inputs: serde_json::json!({
            "sketch": file_name(&args.sketch),
            "image": args.image.as_deref().map(file_name),
            "landmarks": args.landmarks.as_deref().map(file_name),
            "basis": args.basis.as_deref().map(file_name),
        }),
        vertices: basis.vertex_count(),
        triangles: basis.triangle_count(),
        iterations: cfg.iters,
        initial_loss: result.history.first().unwrap_or(&result.final_loss),
        final_loss: &result.final_loss,
        landmark_error_px,
        max_displacement: c.beta_d * c.disp_grid.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        coefficients: Coefficients {
            beta_id: &c.beta_id,
            beta_exp: &c.beta_exp,
            beta_alb: &c.beta_alb,
            beta_a: c.beta_a,
            beta_t: c.beta_t,
            beta_sh: &c.beta_sh,
            beta_d: c.beta_d,
        },
        mask_coverage: d.mask_coverage,
        marching_updates: d.marching_updates,
        skipped_steps: d.skipped_steps.len(),
        zero_feature_iterations: d.zero_feature_iterations,
        no_landmark_iterations: d.no_landmark_iterations,
        artifacts: FIT_ARTIFACTS.to_vec(),
    };
    write_json(&out.join("summary.json"), &summary)
}

pub fn run(args: &FitArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let fit_cfg = cfg.fit_config().map_err(Failure::input)?;
    let inputs = load_inputs(args, cfg).map_err(Failure::input)?;
    let atlas = UvAtlas::new(&inputs.basis, UV_SIZE).map_err(Failure::input)?;
    let out = &cfg.out_dir;
    let started = std::time::Instant::now();
    let result = match fit(&inputs.basis, &atlas, &inputs.supervision, &fit_cfg) {
        Ok(r) => r,
        Err(Error::Diverged { iteration, history }) => {
            create_dir(out).map_err(Failure::other)?;
            write_history(&out.join("history.jsonl"), &history, cfg.iters).map_err(Failure::other)?;
            return Err(Failure::Diverged(anyhow!(
                "fit diverged at iteration {iteration}; loss history written to {}",
                out.join("history.jsonl").display()
            )));
        }
        Err(e @ Error::NonFiniteTerm(_)) => return Err(Failure::Diverged(e.into())),
        Err(e) => return Err(Failure::other(e)),
    };
    create_dir(out).map_err(Failure::other)?;
    write_outputs(out, args, cfg, &fit_cfg, &inputs, &atlas, &result).map_err(Failure::other)?;
    eprintln!(
        "fit: total {:.6} -> {:.6} in {:.1?}, artifacts in {}",
        result.history.first().map_or(f64::NAN, |b| b.total),
        result.final_loss.total,
        started.elapsed(),
        out.display()
    );
    Ok(())
}
