//! Differentiable sketch operators: a tonal "shading" style and an
//! extended difference-of-Gaussians "line" style.

mod blur;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub use blur::{gaussian_blur, gaussian_blur_adjoint, gaussian_half_kernel, reflect};

/// Luminance weights for RGB.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Softening of the gradient magnitude near zero, in intensity units.
pub(crate) const GRAD_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchStyle {
    Shading,
    Line,
}

impl SketchStyle {
    pub fn name(self) -> &'static str {
        match self {
            SketchStyle::Shading => "shading",
            SketchStyle::Line => "line",
        }
    }
}

impl fmt::Display for SketchStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SketchStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<SketchStyle> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shading" => Ok(SketchStyle::Shading),
            "line" => Ok(SketchStyle::Line),
            _ => Err(Error::UnknownStyle(s.to_string())),
        }
    }
}

/// Filter constants of both styles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchParams {
    /// Blur of the luminance before shading, in pixels.
    pub sigma_s: f64,
    /// Edge gain of the shading style.
    pub edge_gain: f64,
    /// Inner Gaussian of the line style, in pixels.
    pub sigma_e: f64,
    /// Ratio of the outer to the inner Gaussian.
    pub k_e: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub phi: f64,
}

impl Default for SketchParams {
    fn default() -> Self {
        SketchParams {
            sigma_s: 1.0,
            edge_gain: 4.0,
            sigma_e: 1.0,
            k_e: 1.6,
            tau: 0.98,
            epsilon: 0.01,
            phi: 50.0,
        }
    }
}

impl SketchParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_s > 0.0 && self.sigma_e > 0.0 && self.k_e > 0.0 && self.phi > 0.0 && self.edge_gain >= 0.0;
        if !ok || !self.tau.is_finite() || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid sketch parameters {self:?}")));
        }
        Ok(())
    }
}

/// A single-channel sketch in `[0, 1]`, 1 being paper white.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchImage {
    pub pixels: Image,
    pub style: SketchStyle,
}

/// `0.299 R + 0.587 G + 0.114 B`; single-channel input passes through.
pub fn luminance(img: &Image) -> Image {
    match img.channels {
        1 => img.clone(),
        _ => {
            let data = img
                .data
                .chunks_exact(img.channels)
                .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
                .collect();
            Image::from_vec(img.width, img.height, 1, data)
        }
    }
}

pub(crate) fn luminance_adjoint(grad: &Image, channels: usize) -> Image {
    match channels {
        1 => grad.clone(),
        _ => {
            let mut data = vec![0.0; grad.data.len() * channels];
            for (p, &g) in grad.data.iter().enumerate() {
                for c in 0..3 {
                    data[p * channels + c] = LUMA[c] * g;
                }
            }
            Image::from_vec(grad.width, grad.height, channels, data)
        }
    }
}

/// Central differences `(x[i+1] - x[i-1]) / 2` with reflect-101 borders.
pub(crate) fn central_gradients(b: &Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (b.width, b.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let xp = reflect(x as isize + 1, w);
            let xm = reflect(x as isize - 1, w);
            let yp = reflect(y as isize + 1, h);
            let ym = reflect(y as isize - 1, h);
            gx[y * w + x] = (b.data[y * w + xp] - b.data[y * w + xm]) * 0.5;
            gy[y * w + x] = (b.data[yp * w + x] - b.data[ym * w + x]) * 0.5;
        }
    }
    (gx, gy)
}

/// Adjoint of [`central_gradients`], accumulating into `out`.
pub(crate) fn central_gradients_adjoint(g_gx: &[f64], g_gy: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let (ax, ay) = (0.5 * g_gx[p], 0.5 * g_gy[p]);
            out[y * w + reflect(x as isize + 1, w)] += ax;
            out[y * w + reflect(x as isize - 1, w)] -= ax;
            out[reflect(y as isize + 1, h) * w + x] += ay;
            out[reflect(y as isize - 1, h) * w + x] -= ay;
        }
    }
}

/// Softened magnitude `sqrt(s2 + e^2) - e`, written to be exactly zero at zero.
#[inline]
pub(crate) fn soft_magnitude(s2: f64) -> f64 {
    s2 / ((s2 + GRAD_EPS * GRAD_EPS).sqrt() + GRAD_EPS)
}

/// Tonal sketch `S = L_s (1 - tanh(k |grad L_s|))` with `L_s` the blurred luminance.
pub fn sketch_shading(img: &Image, params: &SketchParams) -> SketchImage {
    phi_sketch_taped(img, SketchStyle::Shading, params).0
}

/// Gradient of [`sketch_shading`] with respect to the input image.
pub fn sketch_shading_vjp(img: &Image, params: &SketchParams, grad: &Image) -> Image {
    phi_sketch_taped(img, SketchStyle::Shading, params).1.vjp(grad)
}

fn dog(lum: &Image, params: &SketchParams) -> Vec<f64> {
    let g1 = gaussian_blur(lum, params.sigma_e);
    let g2 = gaussian_blur(lum, params.k_e * params.sigma_e);
    g1.data.iter().zip(&g2.data).map(|(a, b)| a - params.tau * b).collect()
}

/// Extended difference of Gaussians with a soft threshold:
/// `S = 1` where `D >= eps`, else `1 + tanh(phi (D - eps))`.
pub fn sketch_line(img: &Image, params: &SketchParams) -> SketchImage {
    phi_sketch_taped(img, SketchStyle::Line, params).0
}

/// Gradient of [`sketch_line`] with respect to the input image.
pub fn sketch_line_vjp(img: &Image, params: &SketchParams, grad: &Image) -> Image {
    phi_sketch_taped(img, SketchStyle::Line, params).1.vjp(grad)
}

/// Sketch of an image in the requested style.
pub fn phi_sketch(img: &Image, style: SketchStyle, params: &SketchParams) -> SketchImage {
    phi_sketch_taped(img, style, params).0
}

/// Gradient of [`phi_sketch`] with respect to the input image.
pub fn phi_sketch_vjp(img: &Image, style: SketchStyle, params: &SketchParams, grad: &Image) -> Image {
    phi_sketch_taped(img, style, params).1.vjp(grad)
}

enum TapeKind {
    Shading { b: Image, gx: Vec<f64>, gy: Vec<f64> },
    Line { d: Vec<f64> },
}

/// Intermediates of one sketch evaluation, kept for its gradient.
pub struct SketchTape {
    params: SketchParams,
    channels: usize,
    kind: TapeKind,
}

/// Sketch of `img` together with the tape needed by [`SketchTape::vjp`].
pub fn phi_sketch_taped(img: &Image, style: SketchStyle, params: &SketchParams) -> (SketchImage, SketchTape) {
    let lum = luminance(img);
    let (pixels, kind) = match style {
        SketchStyle::Shading => {
            let b = gaussian_blur(&lum, params.sigma_s);
            let (gx, gy) = central_gradients(&b);
            let data = b
                .data
                .iter()
                .zip(gx.iter().zip(&gy))
                .map(|(&l, (&x, &y))| {
                    let t = (params.edge_gain * soft_magnitude(x * x + y * y)).tanh();
                    (l * (1.0 - t)).clamp(0.0, 1.0)
                })
                .collect();
            (data, TapeKind::Shading { b, gx, gy })
        }
        SketchStyle::Line => {
            let d = dog(&lum, params);
            let data = d
                .iter()
                .map(|&d| {
                    if d >= params.epsilon {
                        1.0
                    } else {
                        (1.0 + (params.phi * (d - params.epsilon)).tanh()).clamp(0.0, 1.0)
                    }
                })
                .collect();
            (data, TapeKind::Line { d })
        }
    };
    let sketch = SketchImage {
        pixels: Image::from_vec(img.width, img.height, 1, pixels),
        style,
    };
    let tape = SketchTape {
        params: *params,
        channels: img.channels,
        kind,
    };
    (sketch, tape)
}

impl SketchTape {
    /// Gradient with respect to the sketched image, given `grad` on the sketch.
    pub fn vjp(&self, grad: &Image) -> Image {
        let (w, h) = (grad.width, grad.height);
        let params = &self.params;
        let g_lum = match &self.kind {
            TapeKind::Shading { b, gx, gy } => {
                let mut g_b = vec![0.0; w * h];
                let mut g_gx = vec![0.0; w * h];
                let mut g_gy = vec![0.0; w * h];
                for p in 0..w * h {
                    let gs = grad.data[p];
                    if gs == 0.0 {
                        continue;
                    }
                    let s2 = gx[p] * gx[p] + gy[p] * gy[p];
                    let t = (params.edge_gain * soft_magnitude(s2)).tanh();
                    let raw = b.data[p] * (1.0 - t);
                    if !(0.0..=1.0).contains(&raw) {
                        continue;
                    }
                    g_b[p] += gs * (1.0 - t);
                    let g_mag = -gs * b.data[p] * params.edge_gain * (1.0 - t * t);
                    let r = g_mag / (s2 + GRAD_EPS * GRAD_EPS).sqrt();
                    g_gx[p] = r * gx[p];
                    g_gy[p] = r * gy[p];
                }
                central_gradients_adjoint(&g_gx, &g_gy, w, h, &mut g_b);
                gaussian_blur_adjoint(&Image::from_vec(w, h, 1, g_b), params.sigma_s)
            }
            TapeKind::Line { d } => {
                let g_d: Vec<f64> = d
                    .iter()
                    .zip(&grad.data)
                    .map(|(&d, &g)| {
                        if d >= params.epsilon || g == 0.0 {
                            0.0
                        } else {
                            let t = (params.phi * (d - params.epsilon)).tanh();
                            g * params.phi * (1.0 - t * t)
                        }
                    })
                    .collect();
                let g_d = Image::from_vec(w, h, 1, g_d);
                let a = gaussian_blur_adjoint(&g_d, params.sigma_e);
                let b = gaussian_blur_adjoint(&g_d, params.k_e * params.sigma_e);
                let g: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x - params.tau * y).collect();
                Image::from_vec(w, h, 1, g)
            }
        };
        luminance_adjoint(&g_lum, self.channels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb_scene(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, 3, |x, y, c| {
            let r = ((x as f64 - 7.0).powi(2) + (y as f64 - 6.0).powi(2)).sqrt();
            let base = if r < 4.5 { 0.8 } else { 0.25 };
            (base + 0.05 * c as f64 + 0.02 * ((x * 3 + y * 5) % 7) as f64).min(1.0)
        })
    }

    #[test]
    fn luminance_coefficients() {
        let white = Image::filled(2, 2, 3, 1.0);
        assert!(luminance(&white).data.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let green = Image::from_fn(1, 1, 3, |_, _, c| if c == 1 { 1.0 } else { 0.0 });
        assert_eq!(luminance(&green).data[0], 0.587);
    }

    #[test]
    fn flat_field_shading_keeps_its_tone() {
        let mut last = -1.0;
        for g in [0.1, 0.35, 0.6, 0.9] {
            let s = sketch_shading(&Image::filled(9, 7, 3, g), &SketchParams::default());
            let v = s.pixels.data[0];
            assert!(s.pixels.data.iter().all(|&x| x == v));
            assert!((v - g).abs() < 1e-15);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn step_edge_darkens_only_near_the_edge() {
        let img = Image::from_fn(24, 4, 1, |x, _, _| if x < 12 { 0.8 } else { 0.4 });
        let s = sketch_shading(&img, &SketchParams::default());
        let row: Vec<f64> = (0..24).map(|x| s.pixels.get(x, 1, 0)).collect();
        assert!((row[0] - 0.8).abs() < 1e-9 && (row[23] - 0.4).abs() < 1e-9);
        let blurred = gaussian_blur(&img, 1.0);
        assert!(row[11] < 0.7 * blurred.get(11, 1, 0));
        assert!(row[12] < 0.7 * blurred.get(12, 1, 0));
    }

    #[test]
    fn flat_bright_field_gives_white_lines() {
        let p = SketchParams::default();
        for c in [0.5, 0.8, 1.0] {
            assert!(c * (1.0 - p.tau) >= p.epsilon);
            let s = sketch_line(&Image::filled(10, 10, 1, c), &p);
            assert!(s.pixels.data.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn dark_line_is_localized() {
        let img = Image::from_fn(31, 5, 1, |x, _, _| if x == 15 { 0.0 } else { 1.0 });
        let s = sketch_line(&img, &SketchParams::default());
        assert!(s.pixels.get(15, 2, 0) < 0.1);
        for x in (0..10).chain(21..31) {
            assert_eq!(s.pixels.get(x, 2, 0), 1.0);
        }
    }

    #[test]
    fn flips_commute_bitwise() {
        let img = rgb_scene(16, 13);
        for style in [SketchStyle::Shading, SketchStyle::Line] {
            let p = SketchParams::default();
            let a = phi_sketch(&img.flip_horizontal(), style, &p).pixels;
            let b = phi_sketch(&img, style, &p).pixels.flip_horizontal();
            assert_eq!(a, b);
            assert!(a.data.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn style_tokens_parse() {
        assert_eq!("Line".parse::<SketchStyle>().unwrap(), SketchStyle::Line);
        assert!(matches!("charcoal".parse::<SketchStyle>(), Err(Error::UnknownStyle(_))));
    }

    fn check_vjp(style: SketchStyle, img: &Image, tol: f64) {
        let p = SketchParams::default();
        let w = Image::from_fn(img.width, img.height, 1, |x, y, _| ((x * 5 + y * 3) % 7) as f64 / 3.0 - 1.0);
        let f = |im: &Image| -> f64 {
            phi_sketch(im, style, &p).pixels.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
        };
        let g = phi_sketch_vjp(img, style, &p, &w);
        let h = 1e-6;
        for i in 0..img.data.len() {
            let mut a = img.clone();
            let mut b = img.clone();
            a.data[i] += h;
            b.data[i] -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            assert!((fd - g.data[i]).abs() <= tol * fd.abs().max(1e-2), "{style} entry {i}: {fd} vs {}", g.data[i]);
        }
    }

    #[test]
    fn shading_vjp_matches_finite_differences() {
        check_vjp(SketchStyle::Shading, &rgb_scene(14, 12), 1e-5);
    }

    #[test]
    fn line_vjp_matches_finite_differences() {
        // Moderate contrast keeps the soft threshold in its smooth branch.
        let img = Image::from_fn(14, 12, 3, |x, y, c| 0.3 + 0.02 * ((x * 7 + y * 3 + c) % 11) as f64);
        check_vjp(SketchStyle::Line, &img, 1e-4);
    }
}
