//! UV texture fusion: image-sampled texture over model albedo.

use crate::error::{Error, Result};
use crate::fit::{init_coeffs, FitConfig, Fitter};
use crate::image::Image;
use crate::model::{assemble_albedo, assemble_geometry, CoeffVector, FaceBasis};
use crate::objective::{LandmarkTargets, Supervision};
use crate::render::{clamp_albedo, CameraSpec};
use crate::sketch::SketchImage;
use crate::uv::{image_to_uv, UvAtlas, UvMap, UvSemantic};

/// Side of the square median window applied to the visibility mask.
pub const MEDIAN_WINDOW: usize = 5;

/// The two textures and the blend mask of a fusion.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionInputs {
    /// Texture sampled from the photograph.
    pub a_img: UvMap,
    /// Texture of the fitted model albedo.
    pub a_pca: UvMap,
    /// Per-texel weight of `a_img`, in `[0, 1]`.
    pub m_img: Vec<f64>,
    /// The photograph's fit failed; `m_img` is zero everywhere.
    pub fallback: bool,
}

impl FusionInputs {
    /// Complement mask `1 - m_img`.
    pub fn m_pca(&self) -> Vec<f64> {
        self.m_img.iter().map(|m| 1.0 - m).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.a_img, &self.a_pca);
        if a.size() != b.size() {
            return Err(Error::dims("fusion map size", a.size(), b.size()));
        }
        if a.channels() != b.channels() {
            return Err(Error::dims("fusion map channels", a.channels(), b.channels()));
        }
        if self.m_img.len() != a.size() * a.size() {
            return Err(Error::dims("fusion mask", a.size() * a.size(), self.m_img.len()));
        }
        if let Some(i) = self.m_img.iter().position(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidArgument(format!("fusion mask texel {i} lies outside [0, 1]")));
        }
        Ok(())
    }
}

/// Median over a `window`-wide square neighborhood of a `size`-square grid,
/// replicating edge texels.
pub fn median_filter(mask: &[f64], size: usize, window: usize) -> Result<Vec<f64>> {
    if mask.len() != size * size {
        return Err(Error::dims("median input", size * size, mask.len()));
    }
    if window % 2 == 0 {
        return Err(Error::InvalidArgument("median window must be odd".into()));
    }
    let r = (window / 2) as isize;
    let clamp = |i: isize| i.clamp(0, size as isize - 1) as usize;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = vec![0.0; mask.len()];
    for y in 0..size {
        for x in 0..size {
            buf.clear();
            for dy in -r..=r {
                let row = clamp(y as isize + dy) * size;
                for dx in -r..=r {
                    buf.push(mask[row + clamp(x as isize + dx)]);
                }
            }
            let mid = buf.len() / 2;
            let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
            out[y * size + x] = *m;
        }
    }
    Ok(out)
}

/// `m_img * a_img + (1 - m_img) * a_pca` per texel and channel, kept inside
/// the envelope of the two inputs; validity is the union of both.
pub fn fuse_texture(inputs: &FusionInputs) -> Result<UvMap> {
    inputs.validate()?;
    let (a, b) = (&inputs.a_img, &inputs.a_pca);
    let ch = a.channels();
    let mut out = UvMap::new(a.size(), ch, UvSemantic::Color);
    for (t, &m) in inputs.m_img.iter().enumerate() {
        out.validity[t] = a.validity[t].max(b.validity[t]);
        let (ta, tb) = (a.texel(t), b.texel(t));
        for (c, o) in out.texel_mut(t).iter_mut().enumerate() {
            let (x, y) = (ta[c], tb[c]);
            *o = (m * x + (1.0 - m) * y).clamp(x.min(y), x.max(y));
        }
    }
    Ok(out)
}

/// Albedo texture of `coeffs`, clamped to `[0, 1]`.
pub fn albedo_texture(basis: &FaceBasis, atlas: &UvAtlas, coeffs: &CoeffVector) -> Result<UvMap> {
    let albedo = clamp_albedo(&assemble_albedo(basis, coeffs)?);
    atlas.attribute_to_uv(&albedo, 3, UvSemantic::Color)
}

/// Inputs that use the model albedo of `coeffs` everywhere.
pub fn fallback_inputs(basis: &FaceBasis, atlas: &UvAtlas, coeffs: &CoeffVector) -> Result<FusionInputs> {
    let a_pca = albedo_texture(basis, atlas, coeffs)?;
    Ok(FusionInputs {
        a_img: UvMap::new(atlas.size, 3, UvSemantic::Color),
        m_img: vec![0.0; atlas.texel_count()],
        a_pca,
        fallback: true,
    })
}

/// Fits the coarse stage to an RGB photograph with the sketch terms off.
/// `config.camera` must match the photograph. Returns `None` when the fit
/// diverges or produces a non-finite term.
pub fn fit_texture_photo(
    image: &Image,
    landmarks: Option<LandmarkTargets>,
    basis: &FaceBasis,
    atlas: &UvAtlas,
    config: &FitConfig,
) -> Result<Option<CoeffVector>> {
    let (w, h) = (config.camera.width, config.camera.height);
    if image.width != w || image.height != h || image.channels != 3 {
        return Err(Error::dims("texture photograph", 3 * w * h, image.data.len()));
    }
    let mut cfg = config.clone();
    cfg.weights.sketch = 0.0;
    let mut supervision = Supervision::from_sketch(SketchImage {
        pixels: Image::new(w, h, 1),
        style: cfg.style,
    });
    supervision.image = Some(image.clone());
    supervision.landmarks = landmarks;
    supervision.validate()?;

    let mut coeffs = init_coeffs(basis, &cfg.camera, cfg.seed);
    let mut fitter = Fitter::new(basis, atlas, &supervision, &cfg)?;
    match fitter.stage_a(&mut coeffs) {
        Ok(()) => Ok(Some(coeffs)),
        Err(Error::Diverged { .. } | Error::NonFiniteTerm(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Fusion inputs from a fit of the photograph: `a_img` samples the
/// photograph through the fitted surface, `a_pca` is the fitted albedo and
/// `m_img` is the median-filtered visibility restricted to covered texels.
/// Without a fit, the model albedo of the default start is used everywhere.
pub fn build_uv_albedo(
    image: &Image,
    basis: &FaceBasis,
    atlas: &UvAtlas,
    camera: &CameraSpec,
    fit: Option<&CoeffVector>,
) -> Result<FusionInputs> {
    let Some(coeffs) = fit else {
        return fallback_inputs(basis, atlas, &init_coeffs(basis, camera, 0));
    };
    let mesh = assemble_geometry(basis, coeffs)?;
    let a_img = image_to_uv(image, &mesh, atlas, camera)?;
    let mut m_img = median_filter(&a_img.validity, atlas.size, MEDIAN_WINDOW)?;
    for (m, texel) in m_img.iter_mut().zip(&atlas.texels) {
        if texel.is_none() {
            *m = 0.0;
        }
    }
    Ok(FusionInputs {
        a_img,
        a_pca: albedo_texture(basis, atlas, coeffs)?,
        m_img,
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(size: usize, rng: &mut ChaCha8Rng) -> UvMap {
        let mut m = UvMap::new(size, 3, UvSemantic::Color);
        for v in m.values.data.iter_mut() {
            *v = rng.random_range(-1.0..2.0);
        }
        for v in m.validity.iter_mut() {
            *v = f64::from(rng.random_bool(0.5));
        }
        m
    }

    fn inputs(size: usize, seed: u64, mask: impl Fn(usize) -> f64) -> FusionInputs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FusionInputs {
            a_img: random_map(size, &mut rng),
            a_pca: random_map(size, &mut rng),
            m_img: (0..size * size).map(mask).collect(),
            fallback: false,
        }
    }

    #[test]
    fn median_removes_isolated_holes() {
        let size = 16;
        let mut mask = vec![1.0; size * size];
        mask[5 * size + 7] = 0.0;
        mask[0] = 0.0;
        let out = median_filter(&mask, size, MEDIAN_WINDOW).unwrap();
        assert!(out.iter().all(|&m| m == 1.0));
        let mut speck = vec![0.0; size * size];
        speck[9 * size + 9] = 1.0;
        assert!(median_filter(&speck, size, 5).unwrap().iter().all(|&m| m == 0.0));
        assert!(median_filter(&mask, size, 4).is_err());
    }

    #[test]
    fn constant_masks_select_one_input() {
        let ones = inputs(8, 1, |_| 1.0);
        assert_eq!(fuse_texture(&ones).unwrap().values, ones.a_img.values);
        let zeros = inputs(8, 1, |_| 0.0);
        assert_eq!(fuse_texture(&zeros).unwrap().values, zeros.a_pca.values);
    }

    #[test]
    fn half_mask_is_the_midpoint() {
        let f = inputs(8, 2, |_| 0.5);
        let out = fuse_texture(&f).unwrap();
        for t in 0..64 {
            for c in 0..3 {
                let want = 0.5 * (f.a_img.texel(t)[c] + f.a_pca.texel(t)[c]);
                assert!((out.texel(t)[c] - want).abs() < 1e-15);
            }
            assert_eq!(out.validity[t], f.a_img.validity[t].max(f.a_pca.validity[t]));
        }
    }

    #[test]
    fn masks_partition_and_outputs_stay_in_the_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let m: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..=1.0)).collect();
            let f = inputs(8, seed, |t| m[t]);
            for (a, b) in f.m_img.iter().zip(f.m_pca()) {
                assert!((a + b - 1.0).abs() <= f64::EPSILON);
            }
            let out = fuse_texture(&f).unwrap();
            for t in 0..64 {
                for c in 0..3 {
                    let (x, y) = (f.a_img.texel(t)[c], f.a_pca.texel(t)[c]);
                    assert!(out.texel(t)[c] >= x.min(y) && out.texel(t)[c] <= x.max(y));
                }
            }
        }
    }

    #[test]
    fn masks_outside_the_unit_interval_are_rejected() {
        assert!(fuse_texture(&inputs(4, 0, |_| 1.5)).is_err());
        let mut f = inputs(4, 0, |_| 0.5);
        f.m_img.pop();
        assert!(fuse_texture(&f).is_err());
    }
}
