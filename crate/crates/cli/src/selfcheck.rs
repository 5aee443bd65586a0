//! `facesketch selfcheck`: the invariant suite, one line per check.

use std::time::Instant;

use anyhow::{bail, ensure, Result};
use clap::Args;
use facesketch::fit::{self_recovery, synthetic_coeffs, wrinkle_displacement, FitConfig, SyntheticSpec};
use facesketch::gradcheck::{gradient_suite, tolerance};
use facesketch::image::Image;
use facesketch::io::{decode_basis, decode_obj, encode_basis, encode_obj};
use facesketch::model::{assemble_albedo, assemble_geometry, synthetic_basis, FaceBasis, SyntheticBasisSpec};
use facesketch::render::{render_variants, sh_basis, shade_with, RasterSettings, Variant, SH_C0};
use facesketch::sketch::{phi_sketch, SketchParams, SketchStyle};
use facesketch::texture::{fuse_texture, FusionInputs};
use facesketch::uv::{UvAtlas, UvMap, UvSemantic, UV_SIZE};
use facesketch::objective::LossTerm;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

#[derive(Args)]
pub struct SelfcheckArgs {
    /// Deliberately break one component to confirm the suite notices.
    /// Supported: `sh-sign` (negates the constant lighting band).
    #[arg(long, hide = true)]
    pub inject: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Injection {
    ShSign,
}

struct Ctx {
    basis: FaceBasis,
    atlas: UvAtlas,
    inject: Option<Injection>,
}

type Check = fn(&Ctx) -> Result<String>;

const CHECKS: [(&str, Check); 8] = [
    ("gradients", gradients),
    ("dc-band", dc_band),
    ("basis-roundtrip", basis_roundtrip),
    ("render-variants", render_variants_check),
    ("mask-partition", mask_partition),
    ("obj-roundtrip", obj_roundtrip),
    ("sketch-determinism", sketch_determinism),
    ("synthetic-recovery", synthetic_recovery),
];

fn gradients(ctx: &Ctx) -> Result<String> {
    let samples = gradient_suite(&ctx.basis, &ctx.atlas, 16, 3)?;
    let mut worst = Vec::new();
    for term in LossTerm::ALL {
        let err = samples.iter().filter(|s| s.term == term).map(|s| s.rel_err).fold(0.0, f64::max);
        ensure!(err <= tolerance(term), "{}: relative error {err:.2e} > {:.0e}", term.name(), tolerance(term));
        worst.push(format!("{} {err:.1e}", term.name()));
    }
    Ok(format!("{} probes; worst {}", samples.len(), worst.join(", ")))
}

fn dc_band(ctx: &Ctx) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normals: Vec<Vector3<f64>> = (0..200)
        .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)).normalize())
        .collect();
    let albedo: Vec<f64> = (0..600).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut sh = [0.0; 27];
    sh[..3].copy_from_slice(&[0.8, 1.1, 1.4]);
    let negate = ctx.inject == Some(Injection::ShSign);
    let basis = |n: &Vector3<f64>| {
        let mut psi = sh_basis(n);
        if negate {
            psi[0] = -psi[0];
        }
        psi
    };
    let shaded = shade_with(basis, &albedo, &normals, &sh);
    let err = shaded
        .iter()
        .enumerate()
        .map(|(i, &s)| (s - SH_C0 * sh[i % 3] * albedo[i]).abs())
        .fold(0.0, f64::max);
    ensure!(err <= 1e-10, "DC-only shading deviates from {SH_C0} x albedo x light by {err:.2e}");
    Ok(format!("max deviation {err:.1e}"))
}

fn basis_roundtrip(ctx: &Ctx) -> Result<String> {
    // The container stores f32, so the fixed point is the first encoding.
    let bytes = encode_basis(&ctx.basis);
    let decoded = decode_basis(&bytes)?;
    ensure!(encode_basis(&decoded) == bytes, "re-encoded basis differs");
    ensure!(decoded.triangles == ctx.basis.triangles, "topology differs");
    Ok(format!("{} bytes, bytewise stable", bytes.len()))
}

fn render_variants_check(ctx: &Ctx) -> Result<String> {
    let cfg = FitConfig::for_size(64);
    let mut c = synthetic_coeffs(&ctx.basis, &cfg, &SyntheticSpec::default(), 2);
    c.disp_grid = wrinkle_displacement(2, 0.02);
    let mesh = assemble_geometry(&ctx.basis, &c)?;
    let albedo = assemble_albedo(&ctx.basis, &c)?;
    let sh: [f64; 27] = c.beta_sh.as_slice().try_into()?;
    let settings = RasterSettings::for_camera(&cfg.camera);
    let same = render_variants(&mesh, &albedo, &mesh.normals, &sh, &cfg.camera, &settings)?;
    ensure!(same.get(Variant::CoarseTexture) == same.get(Variant::DetailTexture), "I^a != I^b with equal normals");
    ensure!(same.get(Variant::CoarseShading) == same.get(Variant::DetailShading), "I^c != I^d with equal normals");
    let tilted: Vec<Vector3<f64>> = mesh.normals.iter().map(|n| (n + Vector3::new(0.2, -0.1, 0.0)).normalize()).collect();
    let other = render_variants(&mesh, &albedo, &tilted, &sh, &cfg.camera, &settings)?;
    ensure!(
        other.fragments.silhouette_image() == same.fragments.silhouette_image(),
        "silhouette depends on the detail normals"
    );
    ensure!(other.get(Variant::DetailShading) != same.get(Variant::DetailShading), "detail normals have no effect");
    Ok("bitwise equal at equal normals, shared silhouette".into())
}

fn mask_partition(_: &Ctx) -> Result<String> {
    let size = 16;
    let n = size * size;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut texels = 0;
    for _ in 0..100 {
        let mut random_map = || {
            let mut m = UvMap::new(size, 3, UvSemantic::Color);
            m.values.data.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
            m.validity.fill(1.0);
            m
        };
        let (a_img, a_pca) = (random_map(), random_map());
        let m_img: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { rng.random_range(0.0..1.0) } else { f64::from(u8::from(rng.random_bool(0.5))) })
            .collect();
        let inputs = FusionInputs { a_img, a_pca, m_img, fallback: false };
        let m_pca = inputs.m_pca();
        let fused = fuse_texture(&inputs)?;
        for t in 0..n {
            ensure!((inputs.m_img[t] + m_pca[t] - 1.0).abs() <= f64::EPSILON, "masks do not sum to one at texel {t}");
            let (a, b, f) = (inputs.a_img.texel(t), inputs.a_pca.texel(t), fused.texel(t));
            for c in 0..3 {
                ensure!(f[c] >= a[c].min(b[c]) && f[c] <= a[c].max(b[c]), "texel {t} leaves the source envelope");
            }
        }
        texels += n;
    }
    Ok(format!("100 random masks, {texels} texels"))
}

fn obj_roundtrip(ctx: &Ctx) -> Result<String> {
    let cfg = FitConfig::for_size(64);
    let c = synthetic_coeffs(&ctx.basis, &cfg, &SyntheticSpec::default(), 4);
    let mesh = assemble_geometry(&ctx.basis, &c)?;
    let text = encode_obj(&mesh.vertices, &mesh.triangles, Some(&ctx.basis.uv_coords), None)?;
    let back = decode_obj(&text)?;
    ensure!(back.triangles == mesh.triangles, "triangles differ");
    let err = back
        .vertices
        .iter()
        .zip(&mesh.vertices)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    ensure!(back.vertices.len() == mesh.vertices.len() && err <= 1e-9, "vertices differ by {err:.2e}");
    Ok(format!("{} vertices, max error {err:.1e}", mesh.vertices.len()))
}

fn sketch_determinism(_: &Ctx) -> Result<String> {
    let img = Image::from_fn(48, 40, 3, |x, y, c| (0.07 * x as f64 + 0.11 * y as f64 + 0.3 * c as f64).sin().abs());
    let params = SketchParams::default();
    for style in [SketchStyle::Line, SketchStyle::Shading] {
        let a = phi_sketch(&img, style, &params);
        let b = phi_sketch(&img, style, &params);
        ensure!(a == b, "{} sketch differs between runs", style.name());
    }
    Ok("both styles bitwise repeatable".into())
}

fn synthetic_recovery(ctx: &Ctx) -> Result<String> {
    let mut cfg = FitConfig::for_size(64);
    cfg.style = SketchStyle::Line;
    cfg.iters_a = 60;
    cfg.iters_b = 20;
    cfg.iters_c = 20;
    cfg.weights.lmk = 3000.0;
    let truth = synthetic_coeffs(&ctx.basis, &cfg, &SyntheticSpec::default(), 1);
    let r = self_recovery(&ctx.basis, &ctx.atlas, &truth, &cfg)?;
    let detail = format!("objective ratio {:.3}, landmark error {:.2} px", r.ratio(), r.landmark_error_px);
    ensure!(r.ratio() <= 0.1 && r.landmark_error_px <= 1.0, "{detail}");
    Ok(detail)
}

pub fn run(args: &SelfcheckArgs) -> Result<(), Failure> {
    let inject = match args.inject.as_deref() {
        None => None,
        Some("sh-sign") => Some(Injection::ShSign),
        Some(other) => return Err(Failure::input(anyhow::anyhow!("unknown injection `{other}`"))),
    };
    let setup = || -> Result<Ctx> {
        let basis = synthetic_basis(&SyntheticBasisSpec::default())?;
        let atlas = UvAtlas::new(&basis, UV_SIZE)?;
        Ok(Ctx { basis, atlas, inject })
    };
    let ctx = setup().map_err(Failure::other)?;
    let mut failed = Vec::new();
    for (name, check) in CHECKS {
        let started = Instant::now();
        match check(&ctx) {
            Ok(detail) => println!("PASS {name:<20} {detail} ({:.1?})", started.elapsed()),
            Err(e) => {
                println!("FAIL {name:<20} {e:#}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        return Ok(());
    }
    let fail = || -> Result<()> { bail!("failed checks: {}", failed.join(", ")) };
    fail().map_err(Failure::Check)
}
