//! Landmark term with dynamic cheek-contour marching.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::model::{assemble_geometry, CoeffVector, FaceBasis, LANDMARK_COUNT};
use crate::render::{project, CameraSpec};

/// Yaw below which the contour keeps its default vertices.
pub const MARCH_YAW_THRESHOLD_DEG: f64 = 5.0;

/// Ground-truth landmarks in pixels with visibility flags.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkTargets {
    pub points: Vec<Vector2<f64>>,
    pub visible: Vec<bool>,
}

impl LandmarkTargets {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.points.len() != LANDMARK_COUNT || self.visible.len() != LANDMARK_COUNT {
            return Err(Error::dims("landmarks", LANDMARK_COUNT, self.points.len().min(self.visible.len())));
        }
        for (i, (p, &v)) in self.points.iter().zip(&self.visible).enumerate() {
            let inside = p.x >= 0.0 && p.y >= 0.0 && p.x <= width as f64 && p.y <= height as f64;
            if v && !(p.iter().all(|c| c.is_finite()) && inside) {
                return Err(Error::InvalidArgument(format!("visible landmark {i} lies outside the frame")));
            }
        }
        Ok(())
    }
}

/// Re-selects cheek-contour landmark vertices from projected vertex positions.
///
/// Under a yaw beyond the threshold, each contour slot on the side turning
/// away from the camera moves to the candidate with the extremal projected
/// `x` on that side: minimum `x` for positive yaw (which turns the face
/// toward `-x`), maximum `x` for negative yaw. Other slots keep their default.
pub fn march_contour_points(basis: &FaceBasis, points: &[Vector2<f64>], yaw: f64) -> Vec<u32> {
    let mut indices = basis.landmark_indices.clone();
    let yaw_deg = yaw.to_degrees();
    if yaw_deg.abs() < MARCH_YAW_THRESHOLD_DEG {
        return indices;
    }
    for line in &basis.contour_candidates {
        let slot = line.slot as usize;
        let default = basis.landmark_indices[slot] as usize;
        let side_x = basis.mean_vertices[3 * default];
        let turning_away = if yaw_deg > 0.0 { side_x < 0.0 } else { side_x > 0.0 };
        if !turning_away || line.candidates.is_empty() {
            continue;
        }
        let better = |a: f64, b: f64| if yaw_deg > 0.0 { a < b } else { a > b };
        let mut best = line.candidates[0];
        for &c in &line.candidates[1..] {
            if better(points[c as usize].x, points[best as usize].x) {
                best = c;
            }
        }
        indices[slot] = best;
    }
    indices
}

/// Marched landmark indices for the pose of `coeffs`.
pub fn march_contour(basis: &FaceBasis, coeffs: &CoeffVector, cam: &CameraSpec) -> Result<Vec<u32>> {
    let mesh = assemble_geometry(basis, coeffs)?;
    let proj = project(&mesh.vertices, cam);
    Ok(march_contour_points(basis, &proj.points, coeffs.beta_a[1]))
}

/// Sum over visible landmarks of `||p_i - gt_i||`, divided by `width * height`.
/// The flag reports that no landmark was visible.
pub fn landmark_loss(
    points: &[Vector2<f64>],
    targets: &LandmarkTargets,
    indices: &[u32],
    width: usize,
    height: usize,
) -> (f64, bool) {
    let mut sum = 0.0;
    let mut any = false;
    for (k, &v) in indices.iter().enumerate() {
        if !targets.visible[k] {
            continue;
        }
        any = true;
        sum += (points[v as usize] - targets.points[k]).norm();
    }
    (sum / (width * height) as f64, !any)
}

/// Accumulates `g * d landmark_loss / d points` into `grad_points`.
pub fn landmark_loss_vjp(
    points: &[Vector2<f64>],
    targets: &LandmarkTargets,
    indices: &[u32],
    width: usize,
    height: usize,
    g: f64,
    grad_points: &mut [Vector2<f64>],
) {
    let scale = g / (width * height) as f64;
    for (k, &v) in indices.iter().enumerate() {
        if !targets.visible[k] {
            continue;
        }
        let d = points[v as usize] - targets.points[k];
        let n = d.norm();
        if n > 0.0 {
            grad_points[v as usize] += d * (scale / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets(points: Vec<Vector2<f64>>) -> LandmarkTargets {
        let n = points.len();
        LandmarkTargets {
            points,
            visible: vec![true; n],
        }
    }

    #[test]
    fn three_four_five() {
        let pts: Vec<_> = (0..LANDMARK_COUNT).map(|i| Vector2::new(i as f64 * 0.5, 100.0)).collect();
        let idx: Vec<u32> = (0..LANDMARK_COUNT as u32).collect();
        let mut gt = targets(pts.clone());
        assert_eq!(landmark_loss(&pts, &gt, &idx, 224, 224), (0.0, false));
        gt.points[17] += Vector2::new(3.0, 4.0);
        let (v, _) = landmark_loss(&pts, &gt, &idx, 224, 224);
        assert!((v - 5.0 / (224.0 * 224.0)).abs() < 1e-18);
        gt.visible = vec![false; LANDMARK_COUNT];
        assert_eq!(landmark_loss(&pts, &gt, &idx, 224, 224), (0.0, true));
    }

    #[test]
    fn landmark_vjp_matches_finite_differences() {
        let pts: Vec<_> = (0..LANDMARK_COUNT).map(|i| Vector2::new((i as f64).sin() * 50.0 + 100.0, i as f64 * 0.7)).collect();
        let gt = targets((0..LANDMARK_COUNT).map(|i| Vector2::new(100.0 + (i % 7) as f64, i as f64 * 0.6 + 1.0)).collect());
        let idx: Vec<u32> = (0..LANDMARK_COUNT as u32).collect();
        let mut g = vec![Vector2::zeros(); LANDMARK_COUNT];
        landmark_loss_vjp(&pts, &gt, &idx, 224, 224, 1.0, &mut g);
        let h = 1e-5;
        for i in [0usize, 3, 100, 239] {
            for k in 0..2 {
                let mut a = pts.clone();
                let mut b = pts.clone();
                a[i][k] += h;
                b[i][k] -= h;
                let fd = (landmark_loss(&a, &gt, &idx, 224, 224).0 - landmark_loss(&b, &gt, &idx, 224, 224).0) / (2.0 * h);
                assert!((fd - g[i][k]).abs() <= 1e-6 * fd.abs().max(1e-9));
            }
        }
    }
}
