//! Coarse, detail and joint optimization stages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::adam::{adam_step, AdamState};
use crate::fit::config::FitConfig;
use crate::fit::eval::{Evaluator, Scene, Stage};
use crate::model::{CoeffBlock, CoeffVector, FaceBasis, Mesh};
use crate::objective::{march_contour_points, LossBreakdown, Supervision};
use crate::render::{CameraSpec, SH_C0};
use crate::uv::{UvAtlas, UvMap};

/// Deterministic starting point: zero shape, albedo, angles and displacement;
/// the mean face centered at the camera's subject depth; DC-only white light,
/// so the gray shading variant renders the gray albedo unchanged.
///
/// The seed is reserved for an optional jitter mode and does not change the
/// result.
pub fn init_coeffs(basis: &FaceBasis, camera: &CameraSpec, _seed: u64) -> CoeffVector {
    let mut c = CoeffVector::zeros_for(basis);
    let nv = basis.vertex_count().max(1) as f64;
    let mut centroid = [0.0; 3];
    for v in basis.mean_vertices.chunks_exact(3) {
        for k in 0..3 {
            centroid[k] += v[k] / nv;
        }
    }
    c.beta_t = [-centroid[0], -centroid[1], camera.subject_depth - centroid[2]];
    for ch in 0..3 {
        c.beta_sh[ch] = 1.0 / SH_C0;
    }
    c.beta_d = 1.0;
    c
}

/// A block whose gradient was not finite at one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedStep {
    pub iteration: usize,
    pub block: String,
}

/// Side information collected during a fit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Refreshes that changed at least one landmark vertex.
    pub marching_updates: usize,
    pub skipped_steps: Vec<SkippedStep>,
    /// Mean soft-silhouette value of the final render.
    pub mask_coverage: f64,
    /// Iterations where a feature comparison used the zero-vector convention.
    pub zero_feature_iterations: usize,
    /// Iterations where no supplied landmark was visible.
    pub no_landmark_iterations: usize,
}

/// Everything a fit produces.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub coeffs: CoeffVector,
    pub coarse: Mesh,
    /// Displaced UV position map `V'^uv`.
    pub detail_positions: UvMap,
    pub detail: Mesh,
    /// One entry per iteration, evaluated before that iteration's step.
    pub history: Vec<LossBreakdown>,
    /// Objective of the final coefficients under the joint stage.
    pub final_loss: LossBreakdown,
    pub landmark_indices: Vec<u32>,
    pub diagnostics: FitDiagnostics,
}

/// Runs the stages in order over one coefficient vector. Optimizer moments
/// persist across stages, so a block resumes with calibrated step scales.
pub struct Fitter<'a> {
    eval: Evaluator<'a>,
    state: AdamState,
    pub history: Vec<LossBreakdown>,
    pub diagnostics: FitDiagnostics,
    indices: Vec<u32>,
}

impl<'a> Fitter<'a> {
    pub fn new(
        basis: &'a FaceBasis,
        atlas: &'a UvAtlas,
        supervision: &'a Supervision,
        config: &'a FitConfig,
    ) -> Result<Fitter<'a>> {
        Ok(Fitter {
            eval: Evaluator::new(basis, atlas, supervision, config)?,
            state: AdamState::default(),
            history: Vec::new(),
            diagnostics: FitDiagnostics::default(),
            indices: basis.landmark_indices.clone(),
        })
    }

    pub fn evaluator(&self) -> &Evaluator<'a> {
        &self.eval
    }

    /// Current landmark vertex indices after marching.
    pub fn landmark_indices(&self) -> &[u32] {
        &self.indices
    }

    /// Coarse stage: pose, shape, albedo and lighting against the coarse variants.
    pub fn stage_a(&mut self, coeffs: &mut CoeffVector) -> Result<()> {
        self.run(Stage::Coarse, coeffs, self.eval.config.iters_a)
    }

    /// Detail stage: displacement and detail scale over frozen coarse geometry.
    pub fn stage_b(&mut self, coeffs: &mut CoeffVector) -> Result<()> {
        self.run(Stage::Detail, coeffs, self.eval.config.iters_b)
    }

    /// Joint refinement of every block.
    pub fn stage_c(&mut self, coeffs: &mut CoeffVector) -> Result<()> {
        self.run(Stage::Joint, coeffs, self.eval.config.iters_c)
    }

    fn run(&mut self, stage: Stage, coeffs: &mut CoeffVector, iters: usize) -> Result<()> {
        let cfg = self.eval.config;
        let mut cached: Option<Scene> = None;
        let mut first_total = None;
        let mut over = 0;
        for it in 0..iters {
            let fresh;
            let scene = if stage == Stage::Detail {
                if cached.is_none() {
                    cached = Some(self.eval.scene(coeffs, stage)?);
                }
                cached.as_ref().expect("scene cached above")
            } else {
                fresh = self.eval.scene(coeffs, stage)?;
                &fresh
            };
            if stage != Stage::Detail && it % cfg.march_every == 0 {
                let marched = march_contour_points(self.eval.basis, &scene.projection.points, coeffs.beta_a[1]);
                if marched != self.indices {
                    self.diagnostics.marching_updates += 1;
                    self.indices = marched;
                }
            }
            let ev = self.eval.evaluate(coeffs, scene, stage, &self.indices, true)?;
            self.diagnostics.zero_feature_iterations += usize::from(ev.zero_features);
            self.diagnostics.no_landmark_iterations += usize::from(ev.no_landmarks);
            let total = ev.breakdown.total;
            self.history.push(ev.breakdown);
            let base = *first_total.get_or_insert(total);
            if total > cfg.divergence_factor * base {
                over += 1;
                if over >= cfg.divergence_window {
                    return Err(Error::Diverged {
                        iteration: self.history.len() - 1,
                        history: Box::new(self.history.clone()),
                    });
                }
            } else {
                over = 0;
            }
            let grad = ev.grad.expect("gradient requested");
            let report = adam_step(coeffs, &grad, &mut self.state, stage.blocks(), &cfg.steps, &cfg.adam);
            let iteration = self.history.len() - 1;
            self.diagnostics
                .skipped_steps
                .extend(report.skipped.iter().map(|b: &CoeffBlock| SkippedStep {
                    iteration,
                    block: b.name().to_string(),
                }));
        }
        Ok(())
    }

    /// Evaluates the final state and assembles the exports.
    pub fn finish(mut self, coeffs: CoeffVector) -> Result<FitResult> {
        let scene = self.eval.scene(&coeffs, Stage::Joint)?;
        let ev = self.eval.evaluate(&coeffs, &scene, Stage::Joint, &self.indices, false)?;
        let base = scene.base.as_ref().expect("joint scene has uv maps");
        let detail = ev.detail.as_ref().expect("joint stage evaluates detail");
        let detail_vertices = detail.vertices(self.eval.atlas, base, &scene.vertices)?;
        let triangles = &self.eval.basis.triangles;
        self.diagnostics.mask_coverage = scene.mask_coverage();
        Ok(FitResult {
            coarse: scene.mesh(triangles),
            detail_positions: detail.displaced.clone(),
            detail: Mesh::new(detail_vertices, triangles.clone()),
            history: self.history,
            final_loss: ev.breakdown,
            landmark_indices: self.indices,
            diagnostics: self.diagnostics,
            coeffs,
        })
    }
}

/// Three-stage fit from [`init_coeffs`].
pub fn fit(basis: &FaceBasis, atlas: &UvAtlas, supervision: &Supervision, config: &FitConfig) -> Result<FitResult> {
    let init = init_coeffs(basis, &config.camera, config.seed);
    fit_from(basis, atlas, supervision, config, init)
}

/// Three-stage fit from a given starting point.
pub fn fit_from(
    basis: &FaceBasis,
    atlas: &UvAtlas,
    supervision: &Supervision,
    config: &FitConfig,
    mut coeffs: CoeffVector,
) -> Result<FitResult> {
    coeffs.validate(basis)?;
    let mut fitter = Fitter::new(basis, atlas, supervision, config)?;
    fitter.stage_a(&mut coeffs)?;
    fitter.stage_b(&mut coeffs)?;
    fitter.stage_c(&mut coeffs)?;
    fitter.finish(coeffs)
}
