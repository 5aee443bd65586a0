//! Quality measures for fitted results.

use nalgebra::Vector2;

use crate::image::Image;
use crate::objective::LandmarkTargets;

const SSIM_RADIUS: usize = 3;
const SSIM_C1: f64 = 1e-4;
const SSIM_C2: f64 = 9e-4;

/// Mean structural similarity of two single-channel images in `[0, 1]`, over
/// all fully contained 7x7 windows with uniform weights.
pub fn ssim(a: &Image, b: &Image) -> f64 {
    assert!(a.same_shape(b) && a.channels == 1, "ssim needs two single-channel images of one size");
    let (w, h) = (a.width, a.height);
    let k = 2 * SSIM_RADIUS + 1;
    if w < k || h < k {
        return f64::NAN;
    }
    let n = (k * k) as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 0..=h - k {
        for x in 0..=w - k {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..k {
                for dx in 0..k {
                    let p = (y + dy) * w + x + dx;
                    let (u, v) = (a.data[p], b.data[p]);
                    sa += u;
                    sb += v;
                    saa += u * u;
                    sbb += v * v;
                    sab += u * v;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            sum += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Mean pixel distance between predicted and target landmarks over the
/// visible targets; `None` when none is visible.
pub fn mean_landmark_error(predicted: &[Vector2<f64>], targets: &LandmarkTargets) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((p, t), &v) in predicted.iter().zip(&targets.points).zip(&targets.visible) {
        if v {
            sum += (p - t).norm();
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}
