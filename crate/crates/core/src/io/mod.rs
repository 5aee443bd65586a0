//! Persistence: the basis container, images, meshes and atomic writes.

pub mod atomic;
pub mod basis;
pub mod obj;
pub mod png;

pub use atomic::write_atomic;
pub use basis::{decode_basis, encode_basis, load_basis, save_basis, BASIS_MAGIC, BASIS_VERSION};
pub use obj::{decode_obj, encode_mtl, encode_obj, ObjMesh};
pub use png::{decode_rgb, encode_png, fit_square, fit_square_point, read_gray, read_rgb, write_png};
