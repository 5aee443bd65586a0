//! Separable Gaussian blur with reflect-101 borders.

use crate::image::Image;

/// Half kernel `[k_0, k_1, ..., k_r]` with radius `ceil(3 sigma)`, normalized
/// so the full symmetric kernel sums to one.
pub fn gaussian_half_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(0.0) as usize;
    let mut k: Vec<f64> = (0..=radius)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
    for v in &mut k {
        *v /= total;
    }
    k
}

/// Reflect-101 index (`-1 -> 1`, `n -> n - 2`) for any offset.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// One 1-D pass over a strided line. Pairs `x[i-t] + x[i+t]` are summed before
/// weighting so the result is exactly mirror-symmetric.
#[inline]
fn pass(src: &[f64], dst: &mut [f64], n: usize, stride: usize, offset: usize, k: &[f64]) {
    let r = k.len() - 1;
    for i in 0..n {
        let mut acc = k[0] * src[offset + i * stride];
        if i >= r && i + r < n {
            for (t, &kt) in k.iter().enumerate().skip(1) {
                acc += kt * (src[offset + (i - t) * stride] + src[offset + (i + t) * stride]);
            }
        } else {
            for (t, &kt) in k.iter().enumerate().skip(1) {
                let a = reflect(i as isize - t as isize, n);
                let b = reflect(i as isize + t as isize, n);
                acc += kt * (src[offset + a * stride] + src[offset + b * stride]);
            }
        }
        dst[offset + i * stride] = acc;
    }
}

#[inline]
fn pass_adjoint(g: &[f64], out: &mut [f64], n: usize, stride: usize, offset: usize, k: &[f64]) {
    let r = k.len() - 1;
    for i in 0..n {
        let gi = g[offset + i * stride];
        if gi == 0.0 {
            continue;
        }
        out[offset + i * stride] += k[0] * gi;
        let interior = i >= r && i + r < n;
        for (t, &kt) in k.iter().enumerate().skip(1) {
            let (a, b) = if interior {
                (i - t, i + t)
            } else {
                (reflect(i as isize - t as isize, n), reflect(i as isize + t as isize, n))
            };
            out[offset + a * stride] += kt * gi;
            out[offset + b * stride] += kt * gi;
        }
    }
}

/// Blurs a single-channel image: horizontal pass, then vertical.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    assert_eq!(img.channels, 1, "blur expects a single channel");
    let k = gaussian_half_kernel(sigma);
    let (w, h) = (img.width, img.height);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        pass(&img.data, &mut tmp, w, 1, y * w, &k);
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        pass(&tmp, &mut out, h, w, x, &k);
    }
    Image::from_vec(w, h, 1, out)
}

/// Adjoint of [`gaussian_blur`] applied to an output gradient.
pub fn gaussian_blur_adjoint(grad: &Image, sigma: f64) -> Image {
    let k = gaussian_half_kernel(sigma);
    let (w, h) = (grad.width, grad.height);
    let mut tmp = vec![0.0; w * h];
    for x in 0..w {
        pass_adjoint(&grad.data, &mut tmp, h, w, x, &k);
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        pass_adjoint(&tmp, &mut out, w, 1, y * w, &k);
    }
    Image::from_vec(w, h, 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_with_three_sigma_radius() {
        for sigma in [0.5, 1.0, 1.6, 2.3] {
            let k = gaussian_half_kernel(sigma);
            assert_eq!(k.len(), (3.0 * sigma).ceil() as usize + 1);
            let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reflect_101_indices() {
        let r: Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(r, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
    }

    #[test]
    fn constant_image_is_preserved() {
        let img = Image::filled(7, 5, 1, 0.3);
        let out = gaussian_blur(&img, 1.0);
        assert!(out.data.iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn blur_commutes_with_flip_bitwise() {
        let img = Image::from_fn(13, 9, 1, |x, y, _| ((x * 7 + y * 3) % 5) as f64 / 4.0 + 0.01 * x as f64);
        assert_eq!(gaussian_blur(&img.flip_horizontal(), 1.3), gaussian_blur(&img, 1.3).flip_horizontal());
    }

    #[test]
    fn adjoint_identity() {
        let a = Image::from_fn(11, 8, 1, |x, y, _| ((x * 5 + y * 11) % 7) as f64 - 3.0);
        let b = Image::from_fn(11, 8, 1, |x, y, _| ((x * 3 + y * 2) % 5) as f64 * 0.5);
        let lhs: f64 = gaussian_blur(&a, 1.2).data.iter().zip(&b.data).map(|(x, y)| x * y).sum();
        let rhs: f64 = gaussian_blur_adjoint(&b, 1.2).data.iter().zip(&a.data).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}
