//! `facesketch texture`.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use facesketch::io::{decode_obj, fit_square, write_atomic, write_png};
use facesketch::model::Mesh;
use facesketch::texture::{
    build_uv_albedo, export_textured_face, fit_texture_photo, fuse_texture, load_library, rank_library, select_texture,
    write_textured_face, FusionInputs, TokenOverlap,
};
use facesketch::uv::{UvAtlas, UvMap, UV_SIZE};
use serde::Serialize;

use crate::artifacts::{basis_or_default, create_dir, write_json};
use crate::config::RunConfig;
use crate::Failure;

#[derive(Args)]
pub struct TextureArgs {
    /// Text describing the desired texture.
    #[arg(long)]
    pub prompt: String,
    /// Directory of texture images with sidecar tag files.
    #[arg(long)]
    pub library: PathBuf,
    /// Output directory of a previous `fit`.
    #[arg(long)]
    pub fit_dir: PathBuf,
    /// Choose uniformly among this many best matches (seeded by `seed`).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Basis container used by the fit; the built-in synthetic basis when omitted.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Verify that every fused texel lies between its two sources.
    #[arg(long)]
    pub check: bool,
}

/// Files written by a successful run.
pub const TEXTURE_ARTIFACTS: [&str; 6] =
    ["selection.json", "fusion.uv", "fusion.png", "face.obj", "face.mtl", "face.png"];

#[derive(Serialize)]
struct Candidate {
    id: String,
    score: f64,
}

#[derive(Serialize)]
struct Selection {
    prompt: String,
    k: usize,
    seed: u64,
    selected: String,
    score: f64,
    candidates: Vec<Candidate>,
    photo_fit_failed: bool,
    image_texels: usize,
    artifacts: [&'static str; 6],
}

/// Texels whose fused value leaves the per-channel range of its sources.
fn envelope_violations(inputs: &FusionInputs, fused: &UvMap) -> usize {
    (0..fused.validity.len())
        .filter(|&t| {
            let (a, b, f) = (inputs.a_img.texel(t), inputs.a_pca.texel(t), fused.texel(t));
            (0..f.len()).any(|c| f[c] < a[c].min(b[c]) || f[c] > a[c].max(b[c]))
        })
        .count()
}

pub fn run(args: &TextureArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let fit_cfg = cfg.fit_config().map_err(Failure::input)?;
    let library = load_library(&args.library)
        .with_context(|| format!("loading library {}", args.library.display()))
        .map_err(Failure::input)?;
    let scorer = TokenOverlap;
    let index = select_texture(&args.prompt, &library, args.k, cfg.seed, &scorer).map_err(Failure::input)?;
    let entry = &library[index];

    let detail_path = args.fit_dir.join("detail.obj");
    let load_mesh = || -> anyhow::Result<Mesh> {
        let text = std::fs::read_to_string(&detail_path).with_context(|| format!("reading {}", detail_path.display()))?;
        let obj = decode_obj(&text)?;
        Ok(Mesh::new(obj.vertices, obj.triangles))
    };
    let mesh = load_mesh().map_err(Failure::input)?;
    let basis = basis_or_default(args.basis.as_deref()).map_err(Failure::input)?;
    if mesh.vertices.len() != basis.vertex_count() || mesh.triangles != basis.triangles {
        return Err(Failure::input(anyhow!(
            "{} does not share the basis topology ({} vertices, basis has {})",
            detail_path.display(),
            mesh.vertices.len(),
            basis.vertex_count()
        )));
    }
    let atlas = UvAtlas::new(&basis, UV_SIZE).map_err(Failure::input)?;

    let photo = fit_square(&entry.image, cfg.size, 0.0);
    let run = || -> anyhow::Result<(FusionInputs, UvMap)> {
        let fit = fit_texture_photo(&photo, None, &basis, &atlas, &fit_cfg)?;
        let inputs = build_uv_albedo(&photo, &basis, &atlas, &fit_cfg.camera, fit.as_ref())?;
        let fused = fuse_texture(&inputs)?;
        Ok((inputs, fused))
    };
    let (inputs, fused) = run().map_err(Failure::other)?;
    if inputs.fallback {
        eprintln!("texture: the photograph fit failed; using model albedo everywhere");
    }

    let out = &cfg.out_dir;
    let write = || -> anyhow::Result<()> {
        create_dir(out)?;
        let ranked = rank_library(&args.prompt, &library, &scorer);
        let selection = Selection {
            prompt: args.prompt.clone(),
            k: args.k,
            seed: cfg.seed,
            selected: entry.id.clone(),
            score: ranked.iter().find(|r| r.0 == index).map_or(0.0, |r| r.1),
            candidates: ranked
                .iter()
                .take(args.k.max(1))
                .map(|&(i, score)| Candidate {
                    id: library[i].id.clone(),
                    score,
                })
                .collect(),
            photo_fit_failed: inputs.fallback,
            image_texels: inputs.m_img.iter().filter(|&&m| m > 0.0).count(),
            artifacts: TEXTURE_ARTIFACTS,
        };
        write_json(&out.join("selection.json"), &selection)?;
        let mut raw = Vec::new();
        fused.write_raw(&mut raw)?;
        write_atomic(out.join("fusion.uv"), &raw)?;
        write_png(out.join("fusion.png"), &fused.preview())?;
        let asset = export_textured_face(&mesh, &basis.uv_coords, &fused, "face")?;
        write_textured_face(out, &asset)?;
        Ok(())
    };
    write().map_err(Failure::other)?;
    eprintln!("texture: selected `{}`, artifacts in {}", entry.id, out.display());

    if args.check {
        let bad = envelope_violations(&inputs, &fused);
        if bad > 0 {
            return Err(Failure::Check(anyhow!("envelope check failed at {bad} texels")));
        }
        println!("envelope check: pass ({} texels)", fused.validity.len());
    }
    Ok(())
}
