//! Adaptive moment estimation with per-block step sizes.

use crate::model::{CoeffBlock, CoeffGrad, CoeffVector};

/// Lower bound that keeps the detail scale strictly positive.
pub const BETA_D_MIN: f64 = 1e-4;

/// Step sizes per coefficient block.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepSizes {
    /// Angles and translation.
    pub pose: f64,
    pub lighting: f64,
    /// Identity and expression.
    pub shape: f64,
    pub albedo: f64,
    pub disp: f64,
    pub detail_scale: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        StepSizes {
            pose: 1e-2,
            lighting: 1e-2,
            shape: 5e-3,
            albedo: 5e-3,
            disp: 1e-2,
            detail_scale: 1e-2,
        }
    }
}

impl StepSizes {
    pub fn for_block(&self, block: CoeffBlock) -> f64 {
        match block {
            CoeffBlock::Identity | CoeffBlock::Expression => self.shape,
            CoeffBlock::Albedo => self.albedo,
            CoeffBlock::Angles | CoeffBlock::Translation => self.pose,
            CoeffBlock::Lighting => self.lighting,
            CoeffBlock::DetailScale => self.detail_scale,
            CoeffBlock::Displacement => self.disp,
        }
    }

    pub fn all(&self) -> [f64; 6] {
        [self.pose, self.lighting, self.shape, self.albedo, self.disp, self.detail_scale]
    }
}

/// Moment decay rates and denominator epsilon.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamSettings {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

/// Optimizer state for every block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    moments: [Moments; 8],
}

impl Default for AdamState {
    fn default() -> Self {
        AdamState {
            moments: Default::default(),
        }
    }
}

fn block_index(block: CoeffBlock) -> usize {
    CoeffBlock::ALL.iter().position(|b| *b == block).unwrap_or(0)
}

/// Outcome of one [`adam_step`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Blocks whose gradient was not finite and were left untouched.
    pub skipped: Vec<CoeffBlock>,
}

/// Applies one bias-corrected Adam update to the listed blocks.
pub fn adam_step(
    params: &mut CoeffVector,
    grad: &CoeffGrad,
    state: &mut AdamState,
    blocks: &[CoeffBlock],
    steps: &StepSizes,
    settings: &AdamSettings,
) -> StepReport {
    let mut report = StepReport::default();
    for &block in blocks {
        let g = grad.block(block);
        if !g.iter().all(|x| x.is_finite()) {
            report.skipped.push(block);
            continue;
        }
        let mo = &mut state.moments[block_index(block)];
        if mo.m.len() != g.len() {
            mo.m = vec![0.0; g.len()];
            mo.v = vec![0.0; g.len()];
            mo.t = 0;
        }
        mo.t += 1;
        let bc1 = 1.0 - settings.beta1.powi(mo.t as i32);
        let bc2 = 1.0 - settings.beta2.powi(mo.t as i32);
        let lr = steps.for_block(block);
        let p = params.block_mut(block);
        for i in 0..g.len() {
            mo.m[i] = settings.beta1 * mo.m[i] + (1.0 - settings.beta1) * g[i];
            mo.v[i] = settings.beta2 * mo.v[i] + (1.0 - settings.beta2) * g[i] * g[i];
            let mhat = mo.m[i] / bc1;
            let vhat = mo.v[i] / bc2;
            p[i] -= lr * mhat / (vhat.sqrt() + settings.eps);
        }
        if block == CoeffBlock::DetailScale {
            params.beta_d = params.beta_d.max(BETA_D_MIN);
        }
    }
    report
}
