use facesketch::fit::{synthetic_coeffs, synthetic_target, wrinkle_displacement, Evaluator, FitConfig, Stage, SyntheticSpec};
use facesketch::model::{synthetic_basis, CoeffBlock, CoeffVector, FaceBasis, SyntheticBasisSpec, DISP_SIZE};
use facesketch::objective::Supervision;
use facesketch::render::Variant;
use facesketch::sketch::SketchStyle;
use facesketch::uv::{UvAtlas, UV_SIZE};

struct Setup {
    basis: FaceBasis,
    atlas: UvAtlas,
    config: FitConfig,
    supervision: Supervision,
    point: CoeffVector,
}

fn setup(style: SketchStyle) -> Setup {
    let basis = synthetic_basis(&SyntheticBasisSpec {
        k_id: 6,
        k_exp: 4,
        k_alb: 4,
        ..Default::default()
    })
    .unwrap();
    let atlas = UvAtlas::new(&basis, UV_SIZE).unwrap();
    let mut config = FitConfig::for_size(16);
    config.style = style;
    let truth = synthetic_coeffs(&basis, &config, &SyntheticSpec::default(), 3);
    let target = synthetic_target(&basis, &atlas, &truth, &config).unwrap();
    let mut supervision = target.supervision.clone();
    supervision.image = Some(target.variants[Variant::CoarseTexture.index()].clone());
    let mut point = synthetic_coeffs(&basis, &config, &SyntheticSpec::default(), 11);
    point.disp_grid = wrinkle_displacement(5, 0.02);
    point.beta_d = 0.8;
    Setup {
        basis,
        atlas,
        config,
        supervision,
        point,
    }
}

fn total(eval: &Evaluator, c: &CoeffVector, stage: Stage, idx: &[u32]) -> f64 {
    let scene = eval.scene(c, stage).unwrap();
    eval.evaluate(c, &scene, stage, idx, false).unwrap().breakdown.total
}

fn check(style: SketchStyle, stage: Stage) {
    let s = setup(style);
    let eval = Evaluator::new(&s.basis, &s.atlas, &s.supervision, &s.config).unwrap();
    let idx = s.basis.landmark_indices.clone();
    let scene = eval.scene(&s.point, stage).unwrap();
    let ev = eval.evaluate(&s.point, &scene, stage, &idx, true).unwrap();
    let grad = ev.grad.unwrap();
    let probe_texels: Vec<usize> = (0..6).map(|k| (110 + 6 * k) * DISP_SIZE + 120 + 3 * k).collect();
    let mut worst: f64 = 0.0;
    for &block in stage.blocks() {
        let n = s.point.block(block).len();
        let entries: Vec<usize> = match block {
            CoeffBlock::Displacement => probe_texels.clone(),
            _ => (0..n.min(4)).collect(),
        };
        for i in entries {
            let h = 1e-6 * s.point.block(block)[i].abs().max(1.0);
            let mut a = s.point.clone();
            let mut b = s.point.clone();
            a.block_mut(block)[i] += h;
            b.block_mut(block)[i] -= h;
            let fd = (total(&eval, &a, stage, &idx) - total(&eval, &b, stage, &idx)) / (2.0 * h);
            let an = grad.block(block)[i];
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            println!("{stage:?} {} [{i}] fd={fd:.9e} an={an:.9e} rel={err:.2e}", block.name());
            worst = worst.max(err);
        }
    }
    assert!(worst <= 1e-3, "worst relative error {worst:e}");
}

#[test]
fn joint_gradient_matches_finite_differences_line() {
    check(SketchStyle::Line, Stage::Joint);
}

#[test]
fn joint_gradient_matches_finite_differences_shading() {
    check(SketchStyle::Shading, Stage::Joint);
}

#[test]
fn coarse_and_detail_stage_gradients_match() {
    check(SketchStyle::Line, Stage::Coarse);
    check(SketchStyle::Shading, Stage::Detail);
}
