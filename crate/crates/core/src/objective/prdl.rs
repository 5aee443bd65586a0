//! Part re-projection distance: soft nearest-distance descriptors of each
//! facial part, compared between projected part vertices and segmentation.

use nalgebra::Vector2;

use crate::model::{FaceBasis, FacePart};

pub const ANCHOR_ROWS: usize = 4;
pub const ANCHOR_COLS: usize = 8;
/// Descriptor temperature as a fraction of the image diagonal.
pub const TAU_FRACTION: f64 = 0.01;

/// 32 anchors on a uniform 4x8 grid of cell centers.
pub fn grid_anchors(width: usize, height: usize) -> Vec<Vector2<f64>> {
    let mut a = Vec::with_capacity(ANCHOR_ROWS * ANCHOR_COLS);
    for r in 0..ANCHOR_ROWS {
        for c in 0..ANCHOR_COLS {
            a.push(Vector2::new(
                (c as f64 + 0.5) * width as f64 / ANCHOR_COLS as f64,
                (r as f64 + 0.5) * height as f64 / ANCHOR_ROWS as f64,
            ));
        }
    }
    a
}

/// Per-anchor soft-min distance `-tau log sum_j exp(-d_j / tau)`, divided by
/// `diagonal`. An empty point set yields the sentinel 1.0 per anchor.
pub fn part_descriptor(points: &[Vector2<f64>], anchors: &[Vector2<f64>], tau: f64, diagonal: f64) -> Vec<f64> {
    if points.is_empty() {
        return vec![1.0; anchors.len()];
    }
    let mut dist = Vec::with_capacity(points.len());
    anchors
        .iter()
        .map(|a| {
            dist.clear();
            dist.extend(points.iter().map(|p| (p - a).norm()));
            let m = dist.iter().copied().fold(f64::INFINITY, f64::min);
            let s: f64 = dist.iter().map(|d| (-(d - m) / tau).exp()).sum();
            (m - tau * s.ln()) / diagonal
        })
        .collect()
}

/// Accumulates `sum_a grad[a] * d descriptor_a / d points` into `grad_points`.
pub fn part_descriptor_vjp(
    points: &[Vector2<f64>],
    anchors: &[Vector2<f64>],
    tau: f64,
    diagonal: f64,
    grad: &[f64],
    grad_points: &mut [Vector2<f64>],
) {
    if points.is_empty() {
        return;
    }
    let mut dist = Vec::with_capacity(points.len());
    for (a, &g) in anchors.iter().zip(grad) {
        if g == 0.0 {
            continue;
        }
        dist.clear();
        dist.extend(points.iter().map(|p| (p - a).norm()));
        let m = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = dist.iter().map(|d| (-(d - m) / tau).exp()).collect();
        let s: f64 = w.iter().sum();
        for (j, p) in points.iter().enumerate() {
            if dist[j] > 0.0 {
                grad_points[j] += (p - a) * (g * w[j] / (s * dist[j] * diagonal));
            }
        }
    }
}

/// Segmentation-side descriptors per part; `None` where the part is absent.
#[derive(Clone, Debug, PartialEq)]
pub struct PartTargets {
    pub anchors: Vec<Vector2<f64>>,
    pub tau: f64,
    pub diagonal: f64,
    pub descriptors: [Option<Vec<f64>>; 8],
}

impl PartTargets {
    /// Builds descriptors from a label image (`0` background, `1..=8` parts
    /// in [`FacePart::code`] order) using pixel centers as points.
    pub fn from_labels(labels: &[u8], width: usize, height: usize) -> PartTargets {
        let anchors = grid_anchors(width, height);
        let diagonal = ((width * width + height * height) as f64).sqrt();
        let tau = TAU_FRACTION * diagonal;
        let mut points: [Vec<Vector2<f64>>; 8] = Default::default();
        for (p, &l) in labels.iter().enumerate() {
            if let Some(part) = FacePart::from_code(l) {
                points[part.index()].push(Vector2::new((p % width) as f64 + 0.5, (p / width) as f64 + 0.5));
            }
        }
        let descriptors = points.map(|pts| (!pts.is_empty()).then(|| part_descriptor(&pts, &anchors, tau, diagonal)));
        PartTargets {
            anchors,
            tau,
            diagonal,
            descriptors,
        }
    }
}

/// `sum_p lambda_p ||G_p(projected part vertices) - G_p(segmentation)||`,
/// divided by `width * height`. Parts absent from the segmentation are skipped.
pub fn prdl_loss(
    points: &[Vector2<f64>],
    basis: &FaceBasis,
    targets: &PartTargets,
    part_weights: &[f64; 8],
    width: usize,
    height: usize,
) -> f64 {
    let mut sum = 0.0;
    for part in FacePart::ALL {
        let lambda = part_weights[part.index()];
        let Some(target) = &targets.descriptors[part.index()] else { continue };
        if lambda == 0.0 {
            continue;
        }
        let pts: Vec<Vector2<f64>> = basis.part_vertices(part).iter().map(|&v| points[v as usize]).collect();
        let d = part_descriptor(&pts, &targets.anchors, targets.tau, targets.diagonal);
        let n = d.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        sum += lambda * n;
    }
    sum / (width * height) as f64
}

/// Accumulates `g * d prdl_loss / d points` into `grad_points`.
#[allow(clippy::too_many_arguments)]
pub fn prdl_loss_vjp(
    points: &[Vector2<f64>],
    basis: &FaceBasis,
    targets: &PartTargets,
    part_weights: &[f64; 8],
    width: usize,
    height: usize,
    g: f64,
    grad_points: &mut [Vector2<f64>],
) {
    let scale = g / (width * height) as f64;
    for part in FacePart::ALL {
        let lambda = part_weights[part.index()];
        let Some(target) = &targets.descriptors[part.index()] else { continue };
        if lambda == 0.0 {
            continue;
        }
        let members = basis.part_vertices(part);
        let pts: Vec<Vector2<f64>> = members.iter().map(|&v| points[v as usize]).collect();
        let d = part_descriptor(&pts, &targets.anchors, targets.tau, targets.diagonal);
        let diff: Vec<f64> = d.iter().zip(target).map(|(a, b)| a - b).collect();
        let n = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        let gd: Vec<f64> = diff.iter().map(|x| scale * lambda * x / n).collect();
        let mut gp = vec![Vector2::zeros(); pts.len()];
        part_descriptor_vjp(&pts, &targets.anchors, targets.tau, targets.diagonal, &gd, &mut gp);
        for (&v, g) in members.iter().zip(gp) {
            grad_points[v as usize] += g;
        }
    }
}
