use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FacePart;

/// Individual terms of the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTerm {
    SketchPhoto,
    SketchPercep,
    Pho,
    Per,
    Lmk,
    Prdl,
    Reg,
    Tv,
}

impl LossTerm {
    pub const ALL: [LossTerm; 8] = [
        LossTerm::SketchPhoto,
        LossTerm::SketchPercep,
        LossTerm::Pho,
        LossTerm::Per,
        LossTerm::Lmk,
        LossTerm::Prdl,
        LossTerm::Reg,
        LossTerm::Tv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossTerm::SketchPhoto => "sketch_photo",
            LossTerm::SketchPercep => "sketch_percep",
            LossTerm::Pho => "pho",
            LossTerm::Per => "per",
            LossTerm::Lmk => "lmk",
            LossTerm::Prdl => "prdl",
            LossTerm::Reg => "reg",
            LossTerm::Tv => "tv",
        }
    }
}

/// Loss weights. `tv` and the internal regularization weights are tuned for
/// the 256 x 256 displacement grid and the synthetic basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub sketch: f64,
    /// λ1, sketch-photometric.
    pub sketch_photo: f64,
    /// λ2, sketch-perception.
    pub sketch_percep: f64,
    pub pho: f64,
    pub per: f64,
    pub lmk: f64,
    pub prdl: f64,
    pub reg: f64,
    pub tv: f64,
    /// Per-part PRDL weights, indexed by [`FacePart::index`].
    pub parts: [f64; 8],
    pub reg_id: f64,
    pub reg_exp: f64,
    pub reg_alb: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            sketch: 1.0,
            sketch_photo: 1.33,
            sketch_percep: 0.1,
            pho: 0.57,
            per: 0.1,
            lmk: 1.6e-3,
            prdl: 8e-4,
            reg: 3e-4,
            tv: 1e-2,
            parts: [1.0; 8],
            reg_id: 1.0,
            reg_exp: 1.0,
            reg_alb: 1.7e-3,
        }
    }
}

impl LossWeights {
    /// Effective multiplier of each term inside the total.
    pub fn term_weight(&self, term: LossTerm) -> f64 {
        match term {
            LossTerm::SketchPhoto => self.sketch * self.sketch_photo,
            LossTerm::SketchPercep => self.sketch * self.sketch_percep,
            LossTerm::Pho => self.pho,
            LossTerm::Per => self.per,
            LossTerm::Lmk => self.lmk,
            LossTerm::Prdl => self.prdl,
            LossTerm::Reg => self.reg,
            LossTerm::Tv => self.tv,
        }
    }

    pub fn part(&self, part: FacePart) -> f64 {
        self.parts[part.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sketch,
            self.sketch_photo,
            self.sketch_percep,
            self.pho,
            self.per,
            self.lmk,
            self.prdl,
            self.reg,
            self.tv,
            self.reg_id,
            self.reg_exp,
            self.reg_alb,
        ];
        if all.iter().chain(&self.parts).all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("loss weights must be finite and nonnegative".into()))
        }
    }
}

/// Per-term values, their effective weights, and the weighted total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub sketch_photo: f64,
    pub sketch_percep: f64,
    pub pho: f64,
    pub per: f64,
    pub lmk: f64,
    pub prdl: f64,
    pub reg: f64,
    pub tv: f64,
    pub weights: [f64; 8],
    pub total: f64,
}

impl LossBreakdown {
    pub fn term(&self, term: LossTerm) -> f64 {
        match term {
            LossTerm::SketchPhoto => self.sketch_photo,
            LossTerm::SketchPercep => self.sketch_percep,
            LossTerm::Pho => self.pho,
            LossTerm::Per => self.per,
            LossTerm::Lmk => self.lmk,
            LossTerm::Prdl => self.prdl,
            LossTerm::Reg => self.reg,
            LossTerm::Tv => self.tv,
        }
    }

    pub fn weight(&self, term: LossTerm) -> f64 {
        self.weights[term as usize]
    }
}

/// Weighted sum of the terms, in the fixed order of [`LossTerm::ALL`].
pub fn total_loss(terms: [f64; 8], weights: &LossWeights) -> Result<LossBreakdown> {
    for (term, v) in LossTerm::ALL.iter().zip(terms) {
        if !v.is_finite() {
            return Err(Error::NonFiniteTerm(term.name()));
        }
    }
    let w = LossTerm::ALL.map(|t| weights.term_weight(t));
    let total = w.iter().zip(terms).map(|(w, t)| w * t).sum();
    let [sketch_photo, sketch_percep, pho, per, lmk, prdl, reg, tv] = terms;
    Ok(LossBreakdown {
        sketch_photo,
        sketch_percep,
        pho,
        per,
        lmk,
        prdl,
        reg,
        tv,
        weights: w,
        total,
    })
}
