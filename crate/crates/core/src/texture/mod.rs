//! Text-prompted texture selection and UV texture fusion.

mod export;
mod fusion;
mod library;
mod score;

pub use export::{export_geometry, export_textured_face, relight, write_textured_face, TexturedAsset};
pub use fusion::{
    albedo_texture, build_uv_albedo, fallback_inputs, fit_texture_photo, fuse_texture, median_filter, FusionInputs, MEDIAN_WINDOW,
};
pub use library::load_library;
pub use score::{
    rank_library, score_texture, select_texture, tokenize, EmbeddingScorer, TextureEntry, TextureScorer, TokenOverlap,
};
