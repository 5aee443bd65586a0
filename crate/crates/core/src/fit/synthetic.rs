//! Supervision generated from the model itself, for self-recovery checks.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fit::config::FitConfig;
use crate::fit::eval::{Evaluator, Stage};
use crate::fit::metrics::mean_landmark_error;
use crate::fit::stages::{fit, init_coeffs, FitResult};
use crate::image::Image;
use crate::model::{CoeffVector, FaceBasis, DISP_SIZE};
use crate::objective::{march_contour_points, LandmarkTargets, Segmentation, Supervision};
use crate::render::{project, Variant, SH_C0};
use crate::sketch::{phi_sketch, SketchImage};
use crate::uv::UvAtlas;

/// Magnitudes of randomly drawn ground-truth coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Bound on each identity, expression and albedo coefficient.
    pub coefficient: f64,
    /// Bounds on pitch, yaw and roll in radians.
    pub angles: [f64; 3],
    /// Bound on the in-plane translation in model units.
    pub translation: f64,
    /// Bound on each first-band lighting coefficient.
    pub light: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            coefficient: 0.5,
            angles: [0.06, 0.12, 0.04],
            translation: 0.05,
            light: 0.6,
        }
    }
}

/// Draws ground-truth coefficients around [`init_coeffs`]; white light with a
/// random direction so shading reveals the shape.
pub fn synthetic_coeffs(basis: &FaceBasis, config: &FitConfig, spec: &SyntheticSpec, seed: u64) -> CoeffVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = init_coeffs(basis, &config.camera, seed);
    let mut sym = |b: f64| if b > 0.0 { rng.random_range(-b..b) } else { 0.0 };
    for v in c.beta_id.iter_mut().chain(c.beta_exp.iter_mut()).chain(c.beta_alb.iter_mut()) {
        *v = sym(spec.coefficient);
    }
    for k in 0..3 {
        c.beta_a[k] = sym(spec.angles[k]);
    }
    c.beta_t[0] += sym(spec.translation);
    c.beta_t[1] += sym(spec.translation);
    for band in 1..4 {
        let l = sym(spec.light);
        for ch in 0..3 {
            c.beta_sh[band * 3 + ch] = l;
        }
    }
    for ch in 0..3 {
        c.beta_sh[ch] = 1.0 / SH_C0;
    }
    c
}

/// Smooth sinusoidal wrinkle field in UV space: horizontal ridges over the
/// face front under a Gaussian window.
pub fn wrinkle_displacement(seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = rng.random_range(0.05..0.08);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let tilt = rng.random_range(-0.3..0.3);
    let center = [0.5 + rng.random_range(-0.02..0.02), 0.45 + rng.random_range(-0.02..0.02)];
    let n = DISP_SIZE;
    let mut d = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let u = (c as f64 + 0.5) / n as f64 - center[0];
            let v = (r as f64 + 0.5) / n as f64 - center[1];
            let window = (-(u * u + v * v) / (2.0 * 0.09 * 0.09)).exp();
            let s = (std::f64::consts::TAU * (v + tilt * u) / period + phase).sin();
            d[r * n + c] = amplitude * window * s;
        }
    }
    d
}

/// Rendered ground truth and the supervision derived from it.
#[derive(Clone, Debug)]
pub struct SyntheticTarget {
    pub coeffs: CoeffVector,
    /// The four variants of the ground truth.
    pub variants: [Image; 4],
    pub supervision: Supervision,
    pub landmark_indices: Vec<u32>,
}

/// Renders `coeffs`, sketches the detail-texture variant in `config.style`,
/// and derives landmarks and part labels from the same render.
pub fn synthetic_target(
    basis: &FaceBasis,
    atlas: &UvAtlas,
    coeffs: &CoeffVector,
    config: &FitConfig,
) -> Result<SyntheticTarget> {
    let cam = &config.camera;
    let blank = SketchImage {
        pixels: Image::new(cam.width, cam.height, 1),
        style: config.style,
    };
    let placeholder = Supervision::from_sketch(blank);
    let eval = Evaluator::new(basis, atlas, &placeholder, config)?;
    let scene = eval.scene(coeffs, Stage::Joint)?;
    let indices = march_contour_points(basis, &scene.projection.points, coeffs.beta_a[1]);
    let ev = eval.evaluate(coeffs, &scene, Stage::Joint, &indices, false)?;
    let variants: [Image; 4] = std::array::from_fn(|k| ev.images[k].clone());
    let sketch = phi_sketch(&variants[Variant::DetailTexture.index()], config.style, &config.sketch);

    let points: Vec<Vector2<f64>> = indices.iter().map(|&v| scene.projection.points[v as usize]).collect();
    let visible = points
        .iter()
        .map(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= cam.width as f64 && p.y <= cam.height as f64)
        .collect();
    let labels = scene
        .fragments
        .face_id
        .iter()
        .zip(&scene.fragments.barycentrics)
        .map(|(f, b)| {
            f.map_or(0, |t| {
                let tri = basis.triangles[t as usize];
                let k = (0..3).fold(0, |best, k| if b[k] > b[best] { k } else { best });
                basis.part_membership[tri[k] as usize].map_or(0, |p| p.code())
            })
        })
        .collect();
    let mut supervision = Supervision::from_sketch(sketch);
    supervision.landmarks = Some(LandmarkTargets { points, visible });
    supervision.segmentation = Some(Segmentation {
        width: cam.width,
        height: cam.height,
        labels,
    });
    Ok(SyntheticTarget {
        coeffs: coeffs.clone(),
        variants,
        supervision,
        landmark_indices: indices,
    })
}

/// Outcome of fitting a synthetic target from the default start.
#[derive(Clone, Debug)]
pub struct Recovery {
    /// Joint objective of the starting point, with contour landmarks marched.
    pub initial: f64,
    /// Joint objective of the fitted coefficients.
    pub fitted: f64,
    /// Mean distance in pixels between fitted and target landmarks.
    pub landmark_error_px: f64,
    pub result: FitResult,
}

impl Recovery {
    /// `fitted / initial`.
    pub fn ratio(&self) -> f64 {
        self.fitted / self.initial
    }
}

/// Renders the ground truth `truth`, then runs the full fit on its sketch
/// and landmarks from [`init_coeffs`].
pub fn self_recovery(basis: &FaceBasis, atlas: &UvAtlas, truth: &CoeffVector, config: &FitConfig) -> Result<Recovery> {
    let target = synthetic_target(basis, atlas, truth, config)?;
    let sup = &target.supervision;
    let eval = Evaluator::new(basis, atlas, sup, config)?;
    let init = init_coeffs(basis, &config.camera, config.seed);
    let scene = eval.scene(&init, Stage::Joint)?;
    let indices = march_contour_points(basis, &scene.projection.points, init.beta_a[1]);
    let initial = eval.evaluate(&init, &scene, Stage::Joint, &indices, false)?.breakdown.total;
    let result = fit(basis, atlas, sup, config)?;
    let proj = project(&result.coarse.vertices, &config.camera);
    let points: Vec<Vector2<f64>> = result.landmark_indices.iter().map(|&v| proj.points[v as usize]).collect();
    let targets = sup.landmarks.as_ref().expect("synthetic targets carry landmarks");
    Ok(Recovery {
        initial,
        fitted: result.final_loss.total,
        landmark_error_px: mean_landmark_error(&points, targets).unwrap_or(f64::INFINITY),
        result,
    })
}
