//! Staged direct optimization of coefficients and displacement.

mod adam;
mod config;
mod eval;
mod metrics;
mod stages;
mod synthetic;

pub use adam::{adam_step, AdamSettings, AdamState, StepReport, StepSizes, BETA_D_MIN};
pub use config::FitConfig;
pub use eval::{Evaluation, Evaluator, Scene, Stage};
pub use metrics::{mean_landmark_error, ssim};
pub use stages::{fit, fit_from, init_coeffs, FitDiagnostics, FitResult, Fitter, SkippedStep};
pub use synthetic::{
    self_recovery, synthetic_coeffs, synthetic_target, wrinkle_displacement, SyntheticSpec, SyntheticTarget,
    Recovery,
};
