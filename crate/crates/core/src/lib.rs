//! Reconstruction of detailed, topology-consistent 3D faces from a single sketch.

pub mod error;
pub mod fit;
pub mod gradcheck;
pub mod image;
pub mod io;
pub mod model;
pub mod objective;
pub mod render;
pub mod sketch;
pub mod texture;
pub mod uv;

pub use error::{Error, Result};
pub use image::Image;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/morphable-model.md")]
    mod morphable_model {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
    #[doc = include_str!("../../../book/src/uv-atlas.md")]
    mod uv_atlas {}
    #[doc = include_str!("../../../book/src/sketches.md")]
    mod sketches {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/texture.md")]
    mod texture {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
