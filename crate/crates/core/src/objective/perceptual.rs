//! Deterministic multi-scale feature proxy for perceptual comparisons.
//!
//! Four levels of a binomial pyramid, each split into a 4x4 grid of cells;
//! every cell contributes the mean and standard deviation of intensity and of
//! gradient magnitude, giving 256 features.

use crate::image::Image;
use crate::sketch::{central_gradients, central_gradients_adjoint, luminance, luminance_adjoint, reflect, soft_magnitude, GRAD_EPS};

pub const PYRAMID_LEVELS: usize = 4;
pub const CELLS: usize = 4;
pub const FEATURE_LEN: usize = PYRAMID_LEVELS * CELLS * CELLS * 4;

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
/// Smoothing of the standard deviation, shifted so a constant cell gives 0.
const STD_FLOOR: f64 = 1e-12;

fn down_1d(src: &[f64], dst: &mut [f64], n: usize, m: usize, stride_in: usize, stride_out: usize, off_in: usize, off_out: usize) {
    for i in 0..m {
        let mut acc = 0.0;
        for (t, k) in BINOMIAL.iter().enumerate() {
            acc += k * src[off_in + reflect(2 * i as isize + t as isize - 2, n) * stride_in];
        }
        dst[off_out + i * stride_out] = acc;
    }
}

fn down_1d_adjoint(g: &[f64], out: &mut [f64], n: usize, m: usize, stride_in: usize, stride_out: usize, off_in: usize, off_out: usize) {
    for i in 0..m {
        let gi = g[off_out + i * stride_out];
        for (t, k) in BINOMIAL.iter().enumerate() {
            out[off_in + reflect(2 * i as isize + t as isize - 2, n) * stride_in] += k * gi;
        }
    }
}

/// Binomial blur and 2x decimation; output size `ceil(n / 2)`.
fn downsample(img: &Image) -> Image {
    let (w, h) = (img.width, img.height);
    let (w2, h2) = (w.div_ceil(2), h.div_ceil(2));
    let mut tmp = vec![0.0; w2 * h];
    for y in 0..h {
        down_1d(&img.data, &mut tmp, w, w2, 1, 1, y * w, y * w2);
    }
    let mut out = vec![0.0; w2 * h2];
    for x in 0..w2 {
        down_1d(&tmp, &mut out, h, h2, w2, w2, x, x);
    }
    Image::from_vec(w2, h2, 1, out)
}

fn downsample_adjoint(grad: &Image, w: usize, h: usize) -> Image {
    let (w2, h2) = (grad.width, grad.height);
    let mut tmp = vec![0.0; w2 * h];
    for x in 0..w2 {
        down_1d_adjoint(&grad.data, &mut tmp, h, h2, w2, w2, x, x);
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        down_1d_adjoint(&tmp, &mut out, w, w2, 1, 1, y * w, y * w2);
    }
    Image::from_vec(w, h, 1, out)
}

/// Half-open index range of cell `c` out of [`CELLS`] over `n` samples,
/// widened to one sample when empty.
fn cell_range(c: usize, n: usize) -> (usize, usize) {
    let lo = c * n / CELLS;
    let hi = (c + 1) * n / CELLS;
    if hi > lo {
        (lo, hi)
    } else {
        let lo = lo.min(n - 1);
        (lo, lo + 1)
    }
}

struct Level {
    image: Image,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
}

fn pyramid(img: &Image) -> Vec<Level> {
    let mut levels = Vec::with_capacity(PYRAMID_LEVELS);
    let mut cur = luminance(img);
    for l in 0..PYRAMID_LEVELS {
        if l > 0 {
            cur = downsample(&cur);
        }
        let (gx, gy) = central_gradients(&cur);
        let magnitude = gx.iter().zip(&gy).map(|(x, y)| soft_magnitude(x * x + y * y)).collect();
        levels.push(Level {
            image: cur.clone(),
            gx,
            gy,
            magnitude,
        });
    }
    levels
}

fn cell_pixels(w: usize, h: usize, ci: usize, cj: usize) -> impl Iterator<Item = usize> {
    let (r0, r1) = cell_range(ci, h);
    let (c0, c1) = cell_range(cj, w);
    (r0..r1).flat_map(move |r| (c0..c1).map(move |c| r * w + c))
}

fn mean_std(values: &[f64], pixels: &[usize]) -> (f64, f64) {
    let n = pixels.len() as f64;
    let mean = pixels.iter().map(|&p| values[p]).sum::<f64>() / n;
    let var = pixels.iter().map(|&p| (values[p] - mean).powi(2)).sum::<f64>() / n;
    (mean, (var + STD_FLOOR).sqrt() - STD_FLOOR.sqrt())
}

fn mean_std_vjp(values: &[f64], pixels: &[usize], g_mean: f64, g_std: f64, out: &mut [f64]) {
    let n = pixels.len() as f64;
    let (mean, std) = mean_std(values, pixels);
    let std = std + STD_FLOOR.sqrt();
    for &p in pixels {
        out[p] += g_mean / n + g_std * (values[p] - mean) / (n * std);
    }
}

/// 256 pyramid statistics of the image's luminance.
pub fn perceptual_proxy(img: &Image) -> Vec<f64> {
    let mut feats = Vec::with_capacity(FEATURE_LEN);
    let mut pixels = Vec::new();
    for level in pyramid(img) {
        let (w, h) = (level.image.width, level.image.height);
        for ci in 0..CELLS {
            for cj in 0..CELLS {
                pixels.clear();
                pixels.extend(cell_pixels(w, h, ci, cj));
                let (mi, si) = mean_std(&level.image.data, &pixels);
                let (mg, sg) = mean_std(&level.magnitude, &pixels);
                feats.extend_from_slice(&[mi, si, mg, sg]);
            }
        }
    }
    feats
}

/// Gradient of `<grad, perceptual_proxy(img)>` with respect to `img`.
pub fn perceptual_proxy_vjp(img: &Image, grad: &[f64]) -> Image {
    let levels = pyramid(img);
    let mut pixels = Vec::new();
    let mut carry: Option<Image> = None;
    for (l, level) in levels.iter().enumerate().rev() {
        let (w, h) = (level.image.width, level.image.height);
        let mut g_img = carry.take().map(|c| c.data).unwrap_or_else(|| vec![0.0; w * h]);
        let mut g_mag = vec![0.0; w * h];
        for ci in 0..CELLS {
            for cj in 0..CELLS {
                let f = ((l * CELLS + ci) * CELLS + cj) * 4;
                let g = &grad[f..f + 4];
                if g.iter().all(|&x| x == 0.0) {
                    continue;
                }
                pixels.clear();
                pixels.extend(cell_pixels(w, h, ci, cj));
                mean_std_vjp(&level.image.data, &pixels, g[0], g[1], &mut g_img);
                mean_std_vjp(&level.magnitude, &pixels, g[2], g[3], &mut g_mag);
            }
        }
        let mut g_gx = vec![0.0; w * h];
        let mut g_gy = vec![0.0; w * h];
        for p in 0..w * h {
            if g_mag[p] != 0.0 {
                let (x, y) = (level.gx[p], level.gy[p]);
                let r = g_mag[p] / (x * x + y * y + GRAD_EPS * GRAD_EPS).sqrt();
                g_gx[p] = r * x;
                g_gy[p] = r * y;
            }
        }
        central_gradients_adjoint(&g_gx, &g_gy, w, h, &mut g_img);
        let g_img = Image::from_vec(w, h, 1, g_img);
        carry = Some(if l > 0 {
            let prev = &levels[l - 1].image;
            downsample_adjoint(&g_img, prev.width, prev.height)
        } else {
            g_img
        });
    }
    luminance_adjoint(&carry.expect("at least one level"), img.channels)
}

/// Cosine distance `1 - cos(a, b)` and whether a zero vector forced the
/// orthogonal convention (distance 1).
pub fn cosine_distance(a: &[f64], b: &[f64]) -> (f64, bool) {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return (1.0, true);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot / (na * nb), false)
}

/// Gradients of [`cosine_distance`] with respect to `a` and `b`, scaled by `g`.
pub fn cosine_distance_vjp(a: &[f64], b: &[f64], g: f64) -> (Vec<f64>, Vec<f64>) {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return (vec![0.0; a.len()], vec![0.0; b.len()]);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cos = dot / (na * nb);
    let ga = a.iter().zip(b).map(|(x, y)| -g * (y / (na * nb) - cos * x / (na * na))).collect();
    let gb = a.iter().zip(b).map(|(x, y)| -g * (x / (na * nb) - cos * y / (nb * nb))).collect();
    (ga, gb)
}
