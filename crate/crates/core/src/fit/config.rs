use crate::error::{Error, Result};
use crate::fit::adam::{AdamSettings, StepSizes};
use crate::objective::LossWeights;
use crate::render::{CameraSpec, RasterSettings};
use crate::sketch::{SketchParams, SketchStyle};

/// Settings of a three-stage fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub iters_a: usize,
    pub iters_b: usize,
    pub iters_c: usize,
    pub steps: StepSizes,
    pub adam: AdamSettings,
    /// Reserved for optional initialization jitter; the default init ignores it.
    pub seed: u64,
    pub style: SketchStyle,
    pub sketch: SketchParams,
    pub weights: LossWeights,
    pub camera: CameraSpec,
    pub raster: RasterSettings,
    /// Iterations between landmark-marching refreshes.
    pub march_every: usize,
    /// A stage aborts once its total exceeds this multiple of its first total...
    pub divergence_factor: f64,
    /// ...for this many consecutive iterations.
    pub divergence_window: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        let camera = CameraSpec::default();
        FitConfig {
            iters_a: 400,
            iters_b: 300,
            iters_c: 200,
            steps: StepSizes::default(),
            adam: AdamSettings::default(),
            seed: 0,
            style: SketchStyle::Line,
            sketch: SketchParams::default(),
            weights: LossWeights::default(),
            camera,
            raster: RasterSettings::for_camera(&camera),
            march_every: 10,
            divergence_factor: 10.0,
            divergence_window: 50,
        }
    }
}

impl FitConfig {
    /// Default settings for a square frame of `size` pixels.
    pub fn for_size(size: usize) -> FitConfig {
        let camera = CameraSpec::for_size(size);
        FitConfig {
            camera,
            raster: RasterSettings::for_camera(&camera),
            ..FitConfig::default()
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.iters_a + self.iters_b + self.iters_c
    }

    pub fn validate(&self) -> Result<()> {
        if !self.steps.all().iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidArgument("step sizes must be positive".into()));
        }
        let a = &self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return Err(Error::InvalidArgument("optimizer decays must lie in [0, 1) and eps must be positive".into()));
        }
        if self.march_every == 0 {
            return Err(Error::InvalidArgument("march_every must be at least 1".into()));
        }
        if !(self.divergence_factor > 1.0) || self.divergence_window == 0 {
            return Err(Error::InvalidArgument("divergence factor must exceed 1 with a nonzero window".into()));
        }
        self.camera.validate()?;
        self.raster.validate()?;
        self.sketch.validate()?;
        self.weights.validate()
    }
}
