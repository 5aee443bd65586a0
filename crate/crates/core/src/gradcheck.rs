//! Central finite-difference checks of the analytic objective gradient, one
//! loss term at a time.

use serde::Serialize;

use crate::error::Result;
use crate::fit::{synthetic_coeffs, synthetic_target, wrinkle_displacement, Evaluator, FitConfig, Stage, SyntheticSpec};
use crate::model::{CoeffBlock, CoeffVector, FaceBasis, DISP_SIZE};
use crate::objective::{LossTerm, LossWeights, Supervision};
use crate::render::Variant;
use crate::uv::UvAtlas;

/// One probed coordinate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradSample {
    pub term: LossTerm,
    pub block: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Richardson extrapolation of two central differences, `(4 D(h/2) - D(h)) / 3`,
/// which cancels the second-order truncation error.
pub fn richardson_difference(mut f: impl FnMut(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    let wide = central_difference(&mut f, x, h)?;
    let narrow = central_difference(&mut f, x, 0.5 * h)?;
    Ok((4.0 * narrow - wide) / 3.0)
}

/// Relative step suited to each term: quadratic regularization tolerates
/// wide steps that suppress roundoff, the others need narrow ones.
pub fn default_step(term: LossTerm) -> f64 {
    match term {
        LossTerm::Reg => 1e-3,
        _ => 1e-6,
    }
}

/// Whether a term reaches the coefficients only through projected points,
/// without rasterization.
pub fn is_algebraic(term: LossTerm) -> bool {
    matches!(term, LossTerm::Lmk | LossTerm::Prdl | LossTerm::Reg | LossTerm::Tv)
}

/// Weights that keep `term` alone at unit effective weight. Internal
/// regularization and part weights are kept.
pub fn isolate(weights: &LossWeights, term: LossTerm) -> LossWeights {
    let mut w = LossWeights {
        sketch: 0.0,
        sketch_photo: 0.0,
        sketch_percep: 0.0,
        pho: 0.0,
        per: 0.0,
        lmk: 0.0,
        prdl: 0.0,
        reg: 0.0,
        tv: 0.0,
        ..weights.clone()
    };
    match term {
        LossTerm::SketchPhoto => (w.sketch, w.sketch_photo) = (1.0, 1.0),
        LossTerm::SketchPercep => (w.sketch, w.sketch_percep) = (1.0, 1.0),
        LossTerm::Pho => w.pho = 1.0,
        LossTerm::Per => w.per = 1.0,
        LossTerm::Lmk => w.lmk = 1.0,
        LossTerm::Prdl => w.prdl = 1.0,
        LossTerm::Reg => w.reg = 1.0,
        LossTerm::Tv => w.tv = 1.0,
    }
    w
}

/// Coordinates probed per block: the first `per_block` entries, and for the
/// displacement grid a diagonal run of texels across the face front.
pub fn default_probes(point: &CoeffVector, blocks: &[CoeffBlock], per_block: usize) -> Vec<(CoeffBlock, usize)> {
    let mut out = Vec::new();
    for &block in blocks {
        if block == CoeffBlock::Displacement {
            out.extend((0..per_block).map(|k| (block, (110 + 6 * k) * DISP_SIZE + 120 + 3 * k)));
        } else {
            out.extend((0..point.block(block).len().min(per_block)).map(|i| (block, i)));
        }
    }
    out
}

/// Compares the analytic gradient of `term` alone with extrapolated central
/// differences ([`richardson_difference`]) at `point`, with step
/// `rel_step * max(|x|, 1)`. Landmark indices stay at the basis defaults.
#[allow(clippy::too_many_arguments)]
pub fn check_term(
    basis: &FaceBasis,
    atlas: &UvAtlas,
    supervision: &Supervision,
    config: &FitConfig,
    stage: Stage,
    term: LossTerm,
    point: &CoeffVector,
    probes: &[(CoeffBlock, usize)],
    rel_step: f64,
) -> Result<Vec<GradSample>> {
    let mut cfg = config.clone();
    cfg.weights = isolate(&config.weights, term);
    let eval = Evaluator::new(basis, atlas, supervision, &cfg)?;
    let idx = &basis.landmark_indices;
    let total = |c: &CoeffVector| -> Result<f64> {
        let scene = eval.scene(c, stage)?;
        Ok(eval.evaluate(c, &scene, stage, idx, false)?.breakdown.total)
    };
    let scene = eval.scene(point, stage)?;
    let grad = eval.evaluate(point, &scene, stage, idx, true)?.grad.expect("gradient requested");
    let mut samples = Vec::with_capacity(probes.len());
    for &(block, i) in probes {
        let x = point.block(block)[i];
        let h = rel_step * x.abs().max(1.0);
        let numeric = richardson_difference(
            |v| {
                let mut c = point.clone();
                c.block_mut(block)[i] = v;
                total(&c)
            },
            x,
            h,
        )?;
        let analytic = grad.block(block)[i];
        samples.push(GradSample {
            term,
            block: block.name(),
            index: i,
            analytic,
            numeric,
            rel_err: 0.0,
        });
    }
    // Errors are relative to the larger of the pair, floored at a millionth
    // of the largest gradient seen for the term.
    let scale = samples.iter().map(|s| s.analytic.abs().max(s.numeric.abs())).fold(0.0, f64::max);
    let floor = (1e-6 * scale).max(f64::MIN_POSITIVE);
    for s in &mut samples {
        s.rel_err = relative_error(s.analytic, s.numeric, floor);
    }
    Ok(samples)
}

/// Largest accepted relative error: algebraic terms are exact up to
/// roundoff, terms through the rasterizer carry its smoothing error.
pub fn tolerance(term: LossTerm) -> f64 {
    if is_algebraic(term) {
        1e-6
    } else {
        1e-3
    }
}

/// Checks every term under the joint stage on a `size x size` render.
/// Supervision is rendered from seeded ground truth (sketch, photograph,
/// landmarks and parts); the probed point is a second draw carrying a
/// wrinkle displacement field.
pub fn gradient_suite(basis: &FaceBasis, atlas: &UvAtlas, size: usize, per_block: usize) -> Result<Vec<GradSample>> {
    let config = FitConfig::for_size(size);
    let spec = SyntheticSpec::default();
    let truth = synthetic_coeffs(basis, &config, &spec, 3);
    let target = synthetic_target(basis, atlas, &truth, &config)?;
    let mut supervision = target.supervision;
    supervision.image = Some(target.variants[Variant::CoarseTexture.index()].clone());
    let mut point = synthetic_coeffs(basis, &config, &spec, 11);
    point.disp_grid = wrinkle_displacement(5, 0.02);
    point.beta_d = 0.8;
    let probes = default_probes(&point, Stage::Joint.blocks(), per_block);
    let mut out = Vec::new();
    for term in LossTerm::ALL {
        let step = default_step(term);
        out.extend(check_term(basis, atlas, &supervision, &config, Stage::Joint, term, &point, &probes, step)?);
    }
    Ok(out)
}
