//! Image-space terms: sketch-to-geometry, photometric and perception losses.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::objective::perceptual::{cosine_distance, cosine_distance_vjp, perceptual_proxy, perceptual_proxy_vjp};
use crate::sketch::{phi_sketch_taped, SketchImage, SketchParams};

/// `image ⊙ m_c ⊙ m_render`, masks single-channel and broadcast over channels.
pub fn masked(img: &Image, m_c: &Image, m_render: &Image) -> Image {
    let c = img.channels;
    let data = img
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| v * m_c.data[i / c] * m_render.data[i / c])
        .collect();
    Image::from_vec(img.width, img.height, c, data)
}

fn check_masks(img: &Image, m_c: &Image, m_render: &Image) -> Result<()> {
    for (what, m) in [("occlusion mask", m_c), ("render mask", m_render)] {
        if m.channels != 1 || m.width != img.width || m.height != img.height {
            return Err(Error::dims(what, img.pixel_count(), m.data.len()));
        }
    }
    Ok(())
}

/// Masked L2 distance and masked feature cosine distance of one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairTerms {
    pub photo: f64,
    pub percep: f64,
    /// A feature vector was zero and the cosine term defaulted to 1.
    pub zero_features: bool,
}

/// Compares `x` (derived from a render) with target `y` under the masks.
pub fn pair_terms(x: &Image, y: &Image, m_c: &Image, m_render: &Image) -> Result<PairTerms> {
    if !x.same_shape(y) {
        return Err(Error::dims("compared image", y.data.len(), x.data.len()));
    }
    check_masks(x, m_c, m_render)?;
    let mx = masked(x, m_c, m_render);
    let my = masked(y, m_c, m_render);
    let photo = mx.data.iter().zip(&my.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let (percep, zero_features) = cosine_distance(&perceptual_proxy(&mx), &perceptual_proxy(&my));
    Ok(PairTerms {
        photo,
        percep,
        zero_features,
    })
}

/// Gradients of `g_photo * photo + g_percep * percep` with respect to `x`
/// and the render mask; the latter is accumulated into `grad_mask`.
pub fn pair_terms_vjp(
    x: &Image,
    y: &Image,
    m_c: &Image,
    m_render: &Image,
    g_photo: f64,
    g_percep: f64,
    grad_mask: &mut [f64],
) -> Image {
    let c = x.channels;
    let mx = masked(x, m_c, m_render);
    let my = masked(y, m_c, m_render);
    let mut gx = vec![0.0; x.data.len()];
    if g_photo != 0.0 {
        let norm = mx.data.iter().zip(&my.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..x.data.len() {
                let p = i / c;
                let d = mx.data[i] - my.data[i];
                let s = g_photo * d / norm;
                gx[i] += s * m_c.data[p] * m_render.data[p];
                grad_mask[p] += s * (x.data[i] - y.data[i]) * m_c.data[p];
            }
        }
    }
    if g_percep != 0.0 {
        let fx = perceptual_proxy(&mx);
        let fy = perceptual_proxy(&my);
        let (ga, gb) = cosine_distance_vjp(&fx, &fy, g_percep);
        let gmx = perceptual_proxy_vjp(&mx, &ga);
        let gmy = perceptual_proxy_vjp(&my, &gb);
        for i in 0..x.data.len() {
            let p = i / c;
            gx[i] += gmx.data[i] * m_c.data[p] * m_render.data[p];
            grad_mask[p] += (gmx.data[i] * x.data[i] + gmy.data[i] * y.data[i]) * m_c.data[p];
        }
    }
    Image::from_vec(x.width, x.height, c, gx)
}

/// Sketch-to-geometry terms summed over the supplied render variants.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SketchLoss {
    /// `sum_n ||M^n - M||`.
    pub photo: f64,
    /// `sum_n (1 - cos(F(M^n), F(M)))`.
    pub percep: f64,
    /// `lambda1 * photo + lambda2 * percep`.
    pub value: f64,
    pub zero_features: bool,
}

/// Sketches each render in the target's style and compares it with the
/// target sketch under the masks.
pub fn sketch_loss(
    variants: &[&Image],
    target: &SketchImage,
    params: &SketchParams,
    m_c: &Image,
    m_render: &Image,
    lambda1: f64,
    lambda2: f64,
) -> Result<SketchLoss> {
    let (mut out, _) = sketch_loss_impl(variants, target, params, m_c, m_render, None)?;
    out.value = lambda1 * out.photo + lambda2 * out.percep;
    Ok(out)
}

/// Gradients of `g_photo * photo + g_percep * percep` of [`sketch_loss`] with
/// respect to each variant image; render-mask gradients accumulate into `grad_mask`.
#[allow(clippy::too_many_arguments)]
pub fn sketch_loss_vjp(
    variants: &[&Image],
    target: &SketchImage,
    params: &SketchParams,
    m_c: &Image,
    m_render: &Image,
    g_photo: f64,
    g_percep: f64,
    grad_mask: &mut [f64],
) -> Result<Vec<Image>> {
    Ok(sketch_loss_with_grad(variants, target, params, m_c, m_render, g_photo, g_percep, grad_mask)?.1)
}

/// [`sketch_loss`] with `value = g_photo * photo + g_percep * percep` and its
/// gradients, sharing one sketch per variant and one target feature pass.
#[allow(clippy::too_many_arguments)]
pub fn sketch_loss_with_grad(
    variants: &[&Image],
    target: &SketchImage,
    params: &SketchParams,
    m_c: &Image,
    m_render: &Image,
    g_photo: f64,
    g_percep: f64,
    grad_mask: &mut [f64],
) -> Result<(SketchLoss, Vec<Image>)> {
    let (mut out, grads) = sketch_loss_impl(variants, target, params, m_c, m_render, Some((g_photo, g_percep, grad_mask)))?;
    out.value = g_photo * out.photo + g_percep * out.percep;
    Ok((out, grads))
}

fn sketch_loss_impl(
    variants: &[&Image],
    target: &SketchImage,
    params: &SketchParams,
    m_c: &Image,
    m_render: &Image,
    mut grad: Option<(f64, f64, &mut [f64])>,
) -> Result<(SketchLoss, Vec<Image>)> {
    let y = &target.pixels;
    check_masks(y, m_c, m_render)?;
    let my = masked(y, m_c, m_render);
    let fy = perceptual_proxy(&my);
    let mut g_fy = vec![0.0; fy.len()];
    let mut out = SketchLoss::default();
    let mut grads = Vec::with_capacity(if grad.is_some() { variants.len() } else { 0 });
    for img in variants {
        let (s, tape) = phi_sketch_taped(img, target.style, params);
        let x = &s.pixels;
        if !x.same_shape(y) {
            return Err(Error::dims("compared image", y.data.len(), x.data.len()));
        }
        let mx = masked(x, m_c, m_render);
        let photo = mx.data.iter().zip(&my.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let fx = perceptual_proxy(&mx);
        let (percep, zero) = cosine_distance(&fx, &fy);
        out.photo += photo;
        out.percep += percep;
        out.zero_features |= zero;
        let Some((g_photo, g_percep, grad_mask)) = grad.as_mut() else { continue };
        let mut gx = vec![0.0; x.data.len()];
        if *g_photo != 0.0 && photo > 0.0 {
            for p in 0..x.data.len() {
                let s = *g_photo * (mx.data[p] - my.data[p]) / photo;
                gx[p] += s * m_c.data[p] * m_render.data[p];
                grad_mask[p] += s * (x.data[p] - y.data[p]) * m_c.data[p];
            }
        }
        if *g_percep != 0.0 {
            let (ga, gb) = cosine_distance_vjp(&fx, &fy, *g_percep);
            for (a, b) in g_fy.iter_mut().zip(&gb) {
                *a += b;
            }
            let gmx = perceptual_proxy_vjp(&mx, &ga);
            for p in 0..x.data.len() {
                gx[p] += gmx.data[p] * m_c.data[p] * m_render.data[p];
                grad_mask[p] += gmx.data[p] * x.data[p] * m_c.data[p];
            }
        }
        grads.push(tape.vjp(&Image::from_vec(x.width, x.height, 1, gx)));
    }
    if let Some((_, g_percep, grad_mask)) = grad {
        if g_percep != 0.0 {
            let gmy = perceptual_proxy_vjp(&my, &g_fy);
            for p in 0..y.data.len() {
                grad_mask[p] += gmy.data[p] * y.data[p] * m_c.data[p];
            }
        }
    }
    Ok((out, grads))
}

/// `||masked(render) - masked(image)||`.
pub fn photometric_loss(render: &Image, image: &Image, m_c: &Image, m_render: &Image) -> Result<f64> {
    Ok(pair_terms(render, image, m_c, m_render)?.photo)
}

/// `1 - cos(F(masked(render)), F(masked(image)))` and the zero-feature flag.
pub fn perception_loss(render: &Image, image: &Image, m_c: &Image, m_render: &Image) -> Result<(f64, bool)> {
    let t = pair_terms(render, image, m_c, m_render)?;
    Ok((t.percep, t.zero_features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{phi_sketch, SketchStyle};

    fn img(w: usize, h: usize, c: usize, seed: usize) -> Image {
        Image::from_fn(w, h, c, |x, y, k| ((x * 7 + y * 13 + k * 5 + seed * 3) % 17) as f64 / 17.0)
    }

    #[test]
    fn masked_matches_loop() {
        let a = img(5, 4, 3, 1);
        let mc = img(5, 4, 1, 2);
        let mr = img(5, 4, 1, 3);
        let m = masked(&a, &mc, &mr);
        for y in 0..4 {
            for x in 0..5 {
                for c in 0..3 {
                    assert_eq!(m.get(x, y, c), a.get(x, y, c) * mc.get(x, y, 0) * mr.get(x, y, 0));
                }
            }
        }
        assert_eq!(masked(&a, &Image::filled(5, 4, 1, 1.0), &Image::filled(5, 4, 1, 1.0)), a);
        assert!(masked(&a, &Image::new(5, 4, 1), &mr).data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn photometric_single_pixel_difference() {
        let a = Image::filled(6, 6, 3, 0.5);
        let mut b = a.clone();
        b.set(2, 3, 1, 1.5);
        let ones = Image::filled(6, 6, 1, 1.0);
        assert_eq!(photometric_loss(&a, &a, &ones, &ones).unwrap(), 0.0);
        assert_eq!(photometric_loss(&b, &a, &ones, &ones).unwrap(), 1.0);
    }

    #[test]
    fn perfect_fit_gives_zero_sketch_loss() {
        let render = img(32, 32, 3, 4);
        let p = SketchParams::default();
        let ones = Image::filled(32, 32, 1, 1.0);
        for style in [SketchStyle::Shading, SketchStyle::Line] {
            let target = phi_sketch(&render, style, &p);
            let l = sketch_loss(&[&render, &render], &target, &p, &ones, &ones, 1.33, 0.1).unwrap();
            assert!(l.value.abs() < 1e-10);
        }
    }

    #[test]
    fn zero_masks_flag_the_cosine_convention() {
        let render = img(32, 32, 3, 4);
        let p = SketchParams::default();
        let target = phi_sketch(&img(32, 32, 3, 9), SketchStyle::Shading, &p);
        let zeros = Image::new(32, 32, 1);
        let l = sketch_loss(&[&render], &target, &p, &zeros, &zeros, 1.33, 0.1).unwrap();
        assert_eq!(l.photo, 0.0);
        assert_eq!(l.percep, 1.0);
        assert!(l.zero_features);
    }

    #[test]
    fn pair_gradients_match_finite_differences() {
        let x = img(16, 16, 3, 1);
        let y = img(16, 16, 3, 6);
        let mc = Image::from_fn(16, 16, 1, |a, b, _| if (a + b) % 9 == 0 { 0.0 } else { 1.0 });
        let mr = Image::from_fn(16, 16, 1, |a, b, _| 0.2 + 0.7 * ((a * b) % 5) as f64 / 5.0);
        let f = |x: &Image, mr: &Image| {
            let t = pair_terms(x, &y, &mc, mr).unwrap();
            1.3 * t.photo + 0.4 * t.percep
        };
        let mut gm = vec![0.0; 256];
        let gx = pair_terms_vjp(&x, &y, &mc, &mr, 1.3, 0.4, &mut gm);
        let h = 1e-6;
        for i in (0..x.data.len()).step_by(5) {
            let mut a = x.clone();
            let mut b = x.clone();
            a.data[i] += h;
            b.data[i] -= h;
            let fd = (f(&a, &mr) - f(&b, &mr)) / (2.0 * h);
            assert!((fd - gx.data[i]).abs() <= 1e-4 * fd.abs().max(1e-3), "x {i}");
        }
        for p in (0..256).step_by(3) {
            let mut a = mr.clone();
            let mut b = mr.clone();
            a.data[p] += h;
            b.data[p] -= h;
            let fd = (f(&x, &a) - f(&x, &b)) / (2.0 * h);
            assert!((fd - gm[p]).abs() <= 1e-4 * fd.abs().max(1e-3), "mask {p}");
        }
    }
}
