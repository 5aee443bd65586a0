//! Attribute transport between mesh vertices and the UV grid, displacement
//! maps and their normals.

mod atlas;
mod detail;
mod map;
mod ops;

pub use atlas::{TexelRef, UvAtlas};
pub use detail::{detail_geometry, DetailGeometry, DetailGrad, UvBase};
pub use map::{UvMap, UvSemantic, UV_SIZE};
pub use ops::{apply_displacement, apply_displacement_vjp, image_to_uv, uv_normals, DisplacementGrad, UvNormals};
