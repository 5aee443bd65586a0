use crate::error::{Error, Result};

use super::FaceBasis;

/// Side length of the square displacement grid in UV space.
pub const DISP_SIZE: usize = 256;

/// Every optimizable scalar of the face model, lighting, and detail layer.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVector {
    pub beta_id: Vec<f64>,
    pub beta_exp: Vec<f64>,
    pub beta_alb: Vec<f64>,
    /// Pitch, yaw, roll in radians.
    pub beta_a: [f64; 3],
    pub beta_t: [f64; 3],
    /// Nine SH bands times three color channels, band-major (`[k * 3 + channel]`).
    pub beta_sh: [f64; 27],
    pub beta_d: f64,
    /// Row-major `DISP_SIZE x DISP_SIZE` displacement map.
    pub disp_grid: Vec<f64>,
}

/// Gradients share the layout of the coefficients they differentiate.
pub type CoeffGrad = CoeffVector;

/// Named groups of coefficients, each with its own optimizer settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoeffBlock {
    Identity,
    Expression,
    Albedo,
    Angles,
    Translation,
    Lighting,
    DetailScale,
    Displacement,
}

impl CoeffBlock {
    pub const ALL: [CoeffBlock; 8] = [
        CoeffBlock::Identity,
        CoeffBlock::Expression,
        CoeffBlock::Albedo,
        CoeffBlock::Angles,
        CoeffBlock::Translation,
        CoeffBlock::Lighting,
        CoeffBlock::DetailScale,
        CoeffBlock::Displacement,
    ];

    pub const COARSE: [CoeffBlock; 6] = [
        CoeffBlock::Identity,
        CoeffBlock::Expression,
        CoeffBlock::Albedo,
        CoeffBlock::Angles,
        CoeffBlock::Translation,
        CoeffBlock::Lighting,
    ];

    pub const DETAIL: [CoeffBlock; 2] = [CoeffBlock::DetailScale, CoeffBlock::Displacement];

    pub fn name(self) -> &'static str {
        match self {
            CoeffBlock::Identity => "beta_id",
            CoeffBlock::Expression => "beta_exp",
            CoeffBlock::Albedo => "beta_alb",
            CoeffBlock::Angles => "beta_a",
            CoeffBlock::Translation => "beta_t",
            CoeffBlock::Lighting => "beta_sh",
            CoeffBlock::DetailScale => "beta_d",
            CoeffBlock::Displacement => "disp_grid",
        }
    }
}

impl CoeffVector {
    /// All-zero vector sized for `basis` (including `beta_d`, so this is a
    /// gradient accumulator rather than a valid parameter set).
    pub fn zeros_for(basis: &FaceBasis) -> Self {
        Self::zeros(basis.k_id, basis.k_exp, basis.k_alb)
    }

    pub fn zeros(k_id: usize, k_exp: usize, k_alb: usize) -> Self {
        CoeffVector {
            beta_id: vec![0.0; k_id],
            beta_exp: vec![0.0; k_exp],
            beta_alb: vec![0.0; k_alb],
            beta_a: [0.0; 3],
            beta_t: [0.0; 3],
            beta_sh: [0.0; 27],
            beta_d: 0.0,
            disp_grid: vec![0.0; DISP_SIZE * DISP_SIZE],
        }
    }

    pub fn block(&self, block: CoeffBlock) -> &[f64] {
        match block {
            CoeffBlock::Identity => &self.beta_id,
            CoeffBlock::Expression => &self.beta_exp,
            CoeffBlock::Albedo => &self.beta_alb,
            CoeffBlock::Angles => &self.beta_a,
            CoeffBlock::Translation => &self.beta_t,
            CoeffBlock::Lighting => &self.beta_sh,
            CoeffBlock::DetailScale => std::slice::from_ref(&self.beta_d),
            CoeffBlock::Displacement => &self.disp_grid,
        }
    }

    pub fn block_mut(&mut self, block: CoeffBlock) -> &mut [f64] {
        match block {
            CoeffBlock::Identity => &mut self.beta_id,
            CoeffBlock::Expression => &mut self.beta_exp,
            CoeffBlock::Albedo => &mut self.beta_alb,
            CoeffBlock::Angles => &mut self.beta_a,
            CoeffBlock::Translation => &mut self.beta_t,
            CoeffBlock::Lighting => &mut self.beta_sh,
            CoeffBlock::DetailScale => std::slice::from_mut(&mut self.beta_d),
            CoeffBlock::Displacement => &mut self.disp_grid,
        }
    }

    /// Rejects coefficient vectors whose lengths disagree with `basis`.
    pub fn check_dims(&self, basis: &FaceBasis) -> Result<()> {
        let pairs = [
            ("beta_id", basis.k_id, self.beta_id.len()),
            ("beta_exp", basis.k_exp, self.beta_exp.len()),
            ("beta_alb", basis.k_alb, self.beta_alb.len()),
            ("disp_grid", DISP_SIZE * DISP_SIZE, self.disp_grid.len()),
        ];
        for (what, expected, actual) in pairs {
            if expected != actual {
                return Err(Error::dims(what, expected, actual));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        CoeffBlock::ALL
            .iter()
            .all(|&b| self.block(b).iter().all(|v| v.is_finite()))
    }

    /// Full validity check: dimensions, finiteness, and `beta_d > 0`.
    pub fn validate(&self, basis: &FaceBasis) -> Result<()> {
        self.check_dims(basis)?;
        if !self.is_finite() {
            return Err(Error::InvalidArgument("coefficients contain non-finite values".into()));
        }
        if self.beta_d <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "beta_d must be positive, got {}",
                self.beta_d
            )));
        }
        Ok(())
    }

    /// `self += scale * other`, block by block.
    pub fn add_scaled(&mut self, other: &CoeffVector, scale: f64) {
        for block in CoeffBlock::ALL {
            for (a, b) in self.block_mut(block).iter_mut().zip(other.block(block)) {
                *a += scale * b;
            }
        }
    }

    /// Inner product over all blocks.
    pub fn dot(&self, other: &CoeffVector) -> f64 {
        CoeffBlock::ALL
            .iter()
            .map(|&b| {
                self.block(b)
                    .iter()
                    .zip(other.block(b))
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
            })
            .sum()
    }
}
