//! Forward evaluation of the full objective and its hand-written gradient.

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::fit::config::FitConfig;
use crate::image::Image;
use crate::model::geometry::pose_vertices;
use crate::model::{
    assemble_albedo, assemble_albedo_vjp, assemble_shape, geometry_vjp, vertex_normals, vertex_normals_vjp, CoeffBlock,
    CoeffGrad, CoeffVector, FaceBasis, Mesh, VertexNormals, DISP_SIZE,
};
use crate::objective::{
    landmark_loss, landmark_loss_vjp, pair_terms, pair_terms_vjp, prdl_loss, prdl_loss_vjp, reg_loss, reg_loss_vjp,
    sketch_loss, sketch_loss_with_grad, total_loss, tv_loss, tv_loss_vjp, LossBreakdown, LossTerm, PartTargets, Supervision,
};
use crate::render::{
    clamp_albedo, fragments_vjp, project, project_vjp, rasterize_fragments, shade_fragments, shade_fragments_vjp,
    shade_vjp, silhouette_vjp, variant_colors, FragmentGrad, Fragments, Projection, Variant, A_GRAY,
};
use crate::uv::{detail_geometry, DetailGeometry, UvAtlas, UvBase};

/// Optimization stage, which fixes the free blocks and the supervised variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Coarse coefficients against the coarse variants only.
    Coarse,
    /// Displacement and detail scale with the coarse geometry frozen.
    Detail,
    /// Everything at once.
    Joint,
}

impl Stage {
    pub fn blocks(self) -> &'static [CoeffBlock] {
        match self {
            Stage::Coarse => &CoeffBlock::COARSE,
            Stage::Detail => &CoeffBlock::DETAIL,
            Stage::Joint => &CoeffBlock::ALL,
        }
    }

    pub fn variants(self) -> &'static [Variant] {
        match self {
            Stage::Coarse => &Variant::COARSE,
            _ => &Variant::ALL,
        }
    }

    /// Variant compared with the supervision photograph.
    pub fn photo_variant(self) -> Variant {
        match self {
            Stage::Coarse => Variant::CoarseTexture,
            _ => Variant::DetailTexture,
        }
    }

    pub fn uses_detail(self) -> bool {
        self != Stage::Coarse
    }

    fn moves_geometry(self) -> bool {
        self != Stage::Detail
    }
}

/// Coarse geometry, albedo and rasterized fragments for one coefficient set.
#[derive(Clone, Debug)]
pub struct Scene {
    pub shape: Vec<f64>,
    pub vertices: Vec<Vector3<f64>>,
    pub normals: VertexNormals,
    pub albedo_raw: Vec<f64>,
    /// Albedo clamped to `[0, 1]`.
    pub albedo: Vec<f64>,
    pub projection: Projection,
    pub fragments: Fragments,
    /// Soft silhouette used as the render mask.
    pub mask: Image,
    /// UV maps of the coarse surface; present when detail is evaluated.
    pub base: Option<UvBase>,
}

impl Scene {
    pub fn mesh(&self, triangles: &[[u32; 3]]) -> Mesh {
        Mesh {
            vertices: self.vertices.clone(),
            triangles: triangles.to_vec(),
            normals: self.normals.unit.clone(),
        }
    }

    /// Fraction of the frame covered by the soft silhouette.
    pub fn mask_coverage(&self) -> f64 {
        self.mask.data.iter().sum::<f64>() / self.mask.data.len() as f64
    }
}

/// Value of the objective, optionally with its gradient.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub breakdown: LossBreakdown,
    pub grad: Option<CoeffGrad>,
    /// Some perception-style comparison fell back to the zero-vector convention.
    pub zero_features: bool,
    /// Landmarks were supplied but none was visible.
    pub no_landmarks: bool,
    /// Rendered variants, in the order of [`Stage::variants`].
    pub images: Vec<Image>,
    pub detail: Option<DetailGeometry>,
}

/// Binds a basis, its atlas, supervision and settings.
pub struct Evaluator<'a> {
    pub basis: &'a FaceBasis,
    pub atlas: &'a UvAtlas,
    pub supervision: &'a Supervision,
    pub config: &'a FitConfig,
    part_targets: Option<PartTargets>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        basis: &'a FaceBasis,
        atlas: &'a UvAtlas,
        supervision: &'a Supervision,
        config: &'a FitConfig,
    ) -> Result<Evaluator<'a>> {
        config.validate()?;
        supervision.validate()?;
        if atlas.size != DISP_SIZE {
            return Err(Error::dims("uv atlas size", DISP_SIZE, atlas.size));
        }
        if supervision.width() != config.camera.width || supervision.height() != config.camera.height {
            return Err(Error::dims(
                "supervision size",
                config.camera.width * config.camera.height,
                supervision.width() * supervision.height(),
            ));
        }
        let part_targets = supervision.segmentation.as_ref().map(|s| s.part_targets());
        Ok(Evaluator {
            basis,
            atlas,
            supervision,
            config,
            part_targets,
        })
    }

    /// Builds the coarse state of `coeffs`; UV maps only when `stage` needs them.
    pub fn scene(&self, coeffs: &CoeffVector, stage: Stage) -> Result<Scene> {
        let shape = assemble_shape(self.basis, coeffs)?;
        let vertices = pose_vertices(&shape, coeffs);
        let normals = vertex_normals(&vertices, &self.basis.triangles);
        let albedo_raw = assemble_albedo(self.basis, coeffs)?;
        let albedo = clamp_albedo(&albedo_raw);
        let projection = project(&vertices, &self.config.camera);
        let fragments = rasterize_fragments(&projection, &self.basis.triangles, &self.config.camera, &self.config.raster)?;
        let mask = fragments.silhouette_image();
        let base = if stage.uses_detail() {
            Some(UvBase::new(self.atlas, &vertices)?)
        } else {
            None
        };
        Ok(Scene {
            shape,
            vertices,
            normals,
            albedo_raw,
            albedo,
            projection,
            fragments,
            mask,
            base,
        })
    }

    /// Evaluates every term at `coeffs`. `scene` must come from [`Evaluator::scene`]
    /// for the same coarse coefficients; `indices` are the landmark vertices.
    pub fn evaluate(
        &self,
        coeffs: &CoeffVector,
        scene: &Scene,
        stage: Stage,
        indices: &[u32],
        with_grad: bool,
    ) -> Result<Evaluation> {
        let cfg = self.config;
        let w = &cfg.weights;
        let sup = self.supervision;
        let (width, height) = (cfg.camera.width, cfg.camera.height);
        let tris = &self.basis.triangles;
        let detail = match (&scene.base, stage.uses_detail()) {
            (Some(base), true) => Some(detail_geometry(
                self.atlas,
                base,
                &scene.normals,
                &coeffs.disp_grid,
                coeffs.beta_d,
            )?),
            (None, true) => return Err(Error::InvalidArgument("scene lacks uv maps for a detail stage".into())),
            _ => None,
        };
        let detail_normals = detail.as_ref().map_or(&scene.normals.unit, |d| &d.normals);
        let variants = stage.variants();
        let colors: Vec<Vec<f64>> = variants
            .iter()
            .map(|&v| variant_colors(v, &scene.albedo, &scene.normals.unit, detail_normals, &coeffs.beta_sh))
            .collect();
        let images: Vec<Image> = colors.iter().map(|c| shade_fragments(&scene.fragments, tris, c)).collect();
        let refs: Vec<&Image> = images.iter().collect();

        let (g_sp, g_spc) = (w.term_weight(LossTerm::SketchPhoto), w.term_weight(LossTerm::SketchPercep));
        let mut grad_mask = vec![0.0; width * height];
        let (sketch, sketch_grads) = if with_grad && (g_sp != 0.0 || g_spc != 0.0) {
            let (l, g) =
                sketch_loss_with_grad(&refs, &sup.sketch, &cfg.sketch, &sup.occlusion, &scene.mask, g_sp, g_spc, &mut grad_mask)?;
            (l, Some(g))
        } else {
            (sketch_loss(&refs, &sup.sketch, &cfg.sketch, &sup.occlusion, &scene.mask, 1.0, 1.0)?, None)
        };
        let photo_index = variants.iter().position(|&v| v == stage.photo_variant()).unwrap_or(0);
        let photo = match &sup.image {
            Some(img) => Some(pair_terms(&images[photo_index], img, &sup.occlusion, &scene.mask)?),
            None => None,
        };
        let (lmk, no_landmarks) = match &sup.landmarks {
            Some(t) => landmark_loss(&scene.projection.points, t, indices, width, height),
            None => (0.0, false),
        };
        let prdl = self.part_targets.as_ref().map_or(0.0, |t| {
            prdl_loss(&scene.projection.points, self.basis, t, &w.parts, width, height)
        });
        let terms = [
            sketch.photo,
            sketch.percep,
            photo.map_or(0.0, |p| p.photo),
            photo.map_or(0.0, |p| p.percep),
            lmk,
            prdl,
            reg_loss(coeffs, w),
            tv_loss(&coeffs.disp_grid, DISP_SIZE),
        ];
        let breakdown = total_loss(terms, w)?;
        let zero_features = sketch.zero_features || photo.is_some_and(|p| p.zero_features);

        let grad = if with_grad {
            let grad_images = sketch_grads
                .unwrap_or_else(|| images.iter().map(|i| Image::new(i.width, i.height, i.channels)).collect());
            Some(self.gradient(coeffs, scene, stage, indices, &images, &colors, detail.as_ref(), grad_images, grad_mask))
        } else {
            None
        };
        Ok(Evaluation {
            breakdown,
            grad,
            zero_features,
            no_landmarks,
            images,
            detail,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn gradient(
        &self,
        coeffs: &CoeffVector,
        scene: &Scene,
        stage: Stage,
        indices: &[u32],
        images: &[Image],
        colors: &[Vec<f64>],
        detail: Option<&DetailGeometry>,
        mut grad_images: Vec<Image>,
        mut grad_mask: Vec<f64>,
    ) -> CoeffGrad {
        let cfg = self.config;
        let w = &cfg.weights;
        let sup = self.supervision;
        let (width, height) = (cfg.camera.width, cfg.camera.height);
        let tris = &self.basis.triangles;
        let geom = stage.moves_geometry();
        let variants = stage.variants();
        let nv = scene.vertices.len();
        let mut grad = CoeffVector::zeros_for(self.basis);

        // Photograph terms join the sketch gradients on the images and the render mask.
        if let Some(img) = &sup.image {
            if w.pho != 0.0 || w.per != 0.0 {
                let k = variants.iter().position(|&v| v == stage.photo_variant()).unwrap_or(0);
                let g = pair_terms_vjp(&images[k], img, &sup.occlusion, &scene.mask, w.pho, w.per, &mut grad_mask);
                for (a, b) in grad_images[k].data.iter_mut().zip(&g.data) {
                    *a += b;
                }
            }
        }

        // Shading.
        let mut frag_grad = geom.then(|| FragmentGrad::zeros(&scene.fragments));
        let mut g_albedo = vec![0.0; 3 * nv];
        let mut g_normals = vec![Vector3::zeros(); nv];
        let mut g_detail_normals = vec![Vector3::zeros(); nv];
        let gray = vec![A_GRAY; 3 * nv];
        let detail_normals = detail.map_or(&scene.normals.unit, |d| &d.normals);
        for (k, &v) in variants.iter().enumerate() {
            if grad_images[k].data.iter().all(|&g| g == 0.0) {
                continue;
            }
            let mut g_colors = vec![0.0; 3 * nv];
            shade_fragments_vjp(
                &scene.fragments,
                tris,
                &colors[k],
                &grad_images[k],
                Some(&mut g_colors),
                frag_grad.as_mut(),
            );
            let to_detail = v.uses_detail() && detail.is_some();
            let normals = if v.uses_detail() { detail_normals } else { &scene.normals.unit };
            let albedo = if v.uses_gray() { &gray } else { &scene.albedo };
            let g_alb = (geom && !v.uses_gray()).then_some(g_albedo.as_mut_slice());
            let g_n = if to_detail {
                Some(g_detail_normals.as_mut_slice())
            } else if geom {
                Some(g_normals.as_mut_slice())
            } else {
                None
            };
            shade_vjp(albedo, normals, &coeffs.beta_sh, &g_colors, g_alb, g_n, &mut grad.beta_sh);
        }

        // Detail layer.
        let mut g_vertices = vec![Vector3::zeros(); nv];
        if let (Some(det), Some(base)) = (detail, &scene.base) {
            let mesh = geom.then_some((scene.vertices.as_slice(), tris.as_slice()));
            let dg = det.vjp(
                self.atlas,
                base,
                &scene.normals,
                &coeffs.disp_grid,
                coeffs.beta_d,
                &g_detail_normals,
                mesh,
            );
            for (a, b) in grad.disp_grid.iter_mut().zip(&dg.disp) {
                *a += b;
            }
            grad.beta_d += dg.beta_d;
            if let Some(gv) = dg.vertices {
                for (a, b) in g_vertices.iter_mut().zip(&gv) {
                    *a += b;
                }
            }
            tv_loss_vjp(&coeffs.disp_grid, DISP_SIZE, w.tv, &mut grad.disp_grid);
        }

        // Coarse geometry.
        if let Some(mut fg) = frag_grad {
            silhouette_vjp(&scene.fragments, &grad_mask, &mut fg);
            let mut g_points = vec![Vector2::zeros(); nv];
            let mut g_depth = vec![0.0; nv];
            fragments_vjp(&scene.fragments, &scene.projection, tris, &fg, &mut g_points, &mut g_depth);
            if let Some(t) = &sup.landmarks {
                landmark_loss_vjp(&scene.projection.points, t, indices, width, height, w.lmk, &mut g_points);
            }
            if let Some(t) = &self.part_targets {
                prdl_loss_vjp(&scene.projection.points, self.basis, t, &w.parts, width, height, w.prdl, &mut g_points);
            }
            project_vjp(&scene.vertices, &cfg.camera, &g_points, &g_depth, &mut g_vertices);
            vertex_normals_vjp(&scene.vertices, tris, &scene.normals, &g_normals, &mut g_vertices);
            geometry_vjp(self.basis, coeffs, &scene.shape, &g_vertices, &mut grad);
            for (g, a) in g_albedo.iter_mut().zip(&scene.albedo_raw) {
                if !(*a > 0.0 && *a < 1.0) {
                    *g = 0.0;
                }
            }
            assemble_albedo_vjp(self.basis, &g_albedo, &mut grad);
            reg_loss_vjp(coeffs, w, w.reg, &mut grad);
        }
        grad
    }
}
