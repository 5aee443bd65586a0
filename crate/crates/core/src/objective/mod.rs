//! Supervision terms and their weighted total.

mod image_terms;
mod landmarks;
mod perceptual;
mod prdl;
mod reg;
mod supervision;
mod total;

pub use image_terms::{
    masked, pair_terms, pair_terms_vjp, perception_loss, photometric_loss, sketch_loss, sketch_loss_vjp, sketch_loss_with_grad, PairTerms,
    SketchLoss,
};
pub use landmarks::{
    landmark_loss, landmark_loss_vjp, march_contour, march_contour_points, LandmarkTargets, MARCH_YAW_THRESHOLD_DEG,
};
pub use perceptual::{cosine_distance, cosine_distance_vjp, perceptual_proxy, perceptual_proxy_vjp, FEATURE_LEN};
pub use prdl::{grid_anchors, part_descriptor, part_descriptor_vjp, prdl_loss, prdl_loss_vjp, PartTargets, TAU_FRACTION};
pub use reg::{reg_loss, reg_loss_vjp, tv_loss, tv_loss_vjp, TV_DELTA};
pub use supervision::{Segmentation, Supervision};
pub use total::{total_loss, LossBreakdown, LossTerm, LossWeights};
