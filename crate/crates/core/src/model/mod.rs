//! Linear morphable face model: basis, coefficients, pose, and geometry assembly.

mod basis;
mod coeffs;
pub(crate) mod geometry;
pub(crate) mod normals;
pub(crate) mod synthetic;

pub use basis::{ContourLine, FaceBasis, FacePart, LANDMARK_COUNT};
pub use coeffs::{CoeffBlock, CoeffGrad, CoeffVector, DISP_SIZE};
pub use geometry::{
    assemble_albedo, assemble_albedo_vjp, assemble_geometry, assemble_shape, geometry_vjp,
    rotation_derivatives, rotation_matrix, Mesh,
};
pub use normals::{vertex_normals, vertex_normals_vjp, VertexNormals};
pub use synthetic::{synthetic_basis, SyntheticBasisSpec};
