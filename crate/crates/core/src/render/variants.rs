//! The four render variants: coarse/detail texture and coarse/detail gray shading.

use nalgebra::Vector3;

use crate::error::Result;
use crate::image::Image;
use crate::model::Mesh;
use crate::render::camera::{project, CameraSpec};
use crate::render::raster::{rasterize_fragments, shade_fragments, Fragments, RasterSettings};
use crate::render::sh::{shade, A_GRAY};

/// Which albedo and which normals a variant shades with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `I^a`: model albedo, coarse normals.
    CoarseTexture,
    /// `I^b`: model albedo, detail normals.
    DetailTexture,
    /// `I^c`: gray albedo, coarse normals.
    CoarseShading,
    /// `I^d`: gray albedo, detail normals.
    DetailShading,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::CoarseTexture,
        Variant::DetailTexture,
        Variant::CoarseShading,
        Variant::DetailShading,
    ];
    /// Variants that do not depend on the detail normals.
    pub const COARSE: [Variant; 2] = [Variant::CoarseTexture, Variant::CoarseShading];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['a', 'b', 'c', 'd'][self.index()]
    }

    pub fn uses_detail(self) -> bool {
        matches!(self, Variant::DetailTexture | Variant::DetailShading)
    }

    pub fn uses_gray(self) -> bool {
        matches!(self, Variant::CoarseShading | Variant::DetailShading)
    }
}

/// Albedo as rendered: clamped to `[0, 1]`.
pub fn clamp_albedo(albedo: &[f64]) -> Vec<f64> {
    albedo.iter().map(|a| a.clamp(0.0, 1.0)).collect()
}

/// Per-vertex colors of one variant. `albedo` must already be clamped.
pub fn variant_colors(
    variant: Variant,
    albedo: &[f64],
    coarse_normals: &[Vector3<f64>],
    detail_normals: &[Vector3<f64>],
    sh: &[f64; 27],
) -> Vec<f64> {
    let normals = if variant.uses_detail() { detail_normals } else { coarse_normals };
    if variant.uses_gray() {
        shade(&vec![A_GRAY; albedo.len()], normals, sh)
    } else {
        shade(albedo, normals, sh)
    }
}

/// Variants rendered over one shared geometry.
#[derive(Clone, Debug)]
pub struct RenderedVariants {
    pub fragments: Fragments,
    /// Indexed by [`Variant::index`].
    pub images: [Image; 4],
}

impl RenderedVariants {
    pub fn get(&self, v: Variant) -> &Image {
        &self.images[v.index()]
    }
}

/// Renders `I^a..I^d`. Geometry is always the coarse mesh; detail enters only
/// through `detail_normals`. `albedo` is the raw model albedo.
pub fn render_variants(
    coarse: &Mesh,
    albedo: &[f64],
    detail_normals: &[Vector3<f64>],
    sh: &[f64; 27],
    cam: &CameraSpec,
    settings: &RasterSettings,
) -> Result<RenderedVariants> {
    let proj = project(&coarse.vertices, cam);
    let fragments = rasterize_fragments(&proj, &coarse.triangles, cam, settings)?;
    let albedo = clamp_albedo(albedo);
    let images = Variant::ALL.map(|v| {
        let colors = variant_colors(v, &albedo, &coarse.normals, detail_normals, sh);
        shade_fragments(&fragments, &coarse.triangles, &colors)
    });
    Ok(RenderedVariants { fragments, images })
}
