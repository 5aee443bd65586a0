//! Projection, spherical-harmonics shading and soft rasterization.

pub mod camera;
pub mod raster;
pub mod sh;
pub mod variants;

pub use camera::{project, project_vjp, CameraSpec, Projection};
pub use raster::{
    fragments_vjp, rasterize, rasterize_fragments, shade_fragments, shade_fragments_vjp, silhouette_vjp,
    signed_area2, Fragment, FragmentGrad, Fragments, RasterOutput, RasterSettings,
};
pub use sh::{shade, shade_vjp, shade_with, sh_basis, sh_basis_checked, AlbedoMode, ShadingParams, A_GRAY, SH_C0};
pub use variants::{clamp_albedo, render_variants, variant_colors, RenderedVariants, Variant};
