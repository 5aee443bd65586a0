use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};

/// Fixed pinhole camera at the origin looking down `+z`, image `x` right and
/// `y` down. Pixel `(i, j)` covers `[j, j+1) x [i, i+1)` in projected units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraSpec {
    pub focal: f64,
    pub principal_point: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
    /// Depth at which the subject's origin is placed on initialization.
    pub subject_depth: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec::for_size(224)
    }
}

impl CameraSpec {
    /// Default camera for a square `size x size` frame: focal 1015 px at 224
    /// scaled proportionally, principal point at the image center.
    pub fn for_size(size: usize) -> CameraSpec {
        let s = size as f64;
        CameraSpec {
            focal: 1015.0 * s / 224.0,
            principal_point: [s / 2.0, s / 2.0],
            width: size,
            height: size,
            near: 1.0,
            far: 50.0,
            subject_depth: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal > 0.0) {
            return Err(Error::InvalidArgument(format!("focal must be positive, got {}", self.focal)));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be nonzero".into()));
        }
        Ok(())
    }

    pub fn depth_range(&self) -> f64 {
        self.far - self.near
    }

    /// Length of the image diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    /// Camera with the same field of view at a different square size.
    pub fn rescaled(&self, width: usize, height: usize) -> CameraSpec {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        CameraSpec {
            focal: self.focal * sx,
            principal_point: [self.principal_point[0] * sx, self.principal_point[1] * sy],
            width,
            height,
            ..*self
        }
    }
}

/// Projected vertices plus their (clamped) camera depths.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub points: Vec<Vector2<f64>>,
    pub depth: Vec<f64>,
    /// Vertices with `z <= near`; their projection uses `z = near`.
    pub behind: Vec<u32>,
}

/// Pinhole projection `u = f x / z + cx`, `v = f y / z + cy`.
pub fn project(vertices: &[Vector3<f64>], cam: &CameraSpec) -> Projection {
    let [cx, cy] = cam.principal_point;
    let mut behind = Vec::new();
    let mut points = Vec::with_capacity(vertices.len());
    let mut depth = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        let z = if v.z > cam.near {
            v.z
        } else {
            behind.push(i as u32);
            cam.near
        };
        points.push(Vector2::new(cam.focal * v.x / z + cx, cam.focal * v.y / z + cy));
        depth.push(z);
    }
    Projection {
        points,
        depth,
        behind,
    }
}

/// Back-propagates gradients on projected points and depths to the vertices.
pub fn project_vjp(
    vertices: &[Vector3<f64>],
    cam: &CameraSpec,
    grad_points: &[Vector2<f64>],
    grad_depth: &[f64],
    grad_vertices: &mut [Vector3<f64>],
) {
    for (i, v) in vertices.iter().enumerate() {
        let gp = grad_points[i];
        let gz = grad_depth[i];
        if v.z > cam.near {
            let z = v.z;
            let f = cam.focal / z;
            grad_vertices[i] += Vector3::new(
                f * gp.x,
                f * gp.y,
                -f * (v.x * gp.x + v.y * gp.y) / z + gz,
            );
        } else {
            let f = cam.focal / cam.near;
            grad_vertices[i] += Vector3::new(f * gp.x, f * gp.y, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optical_axis_hits_principal_point() {
        let cam = CameraSpec::default();
        for z in [2.0, 10.0, 40.0] {
            let p = project(&[Vector3::new(0.0, 0.0, z)], &cam);
            assert_eq!(p.points[0], Vector2::new(112.0, 112.0));
        }
    }

    #[test]
    fn pinhole_formula() {
        let cam = CameraSpec {
            focal: 500.0,
            principal_point: [0.0, 0.0],
            ..CameraSpec::default()
        };
        let p = project(&[Vector3::new(1.0, -2.0, 500.0)], &cam);
        assert_eq!(p.points[0], Vector2::new(1.0, -2.0));
    }

    #[test]
    fn doubling_depth_halves_offset() {
        let cam = CameraSpec::default();
        let c = Vector2::new(112.0, 112.0);
        let a = project(&[Vector3::new(0.3, -0.2, 5.0)], &cam).points[0] - c;
        let b = project(&[Vector3::new(0.3, -0.2, 10.0)], &cam).points[0] - c;
        assert!((a - 2.0 * b).norm() < 1e-12);
    }

    #[test]
    fn behind_camera_is_flagged_and_clamped() {
        let cam = CameraSpec::default();
        let p = project(&[Vector3::new(0.1, 0.1, -3.0)], &cam);
        assert_eq!(p.behind, vec![0]);
        assert_eq!(p.depth[0], cam.near);
        assert!(p.points[0].iter().all(|c| c.is_finite()));
    }

    #[test]
    fn projection_vjp_matches_finite_differences() {
        let cam = CameraSpec::default();
        let v = vec![Vector3::new(0.3, -0.4, 9.0), Vector3::new(-0.7, 0.2, 11.0)];
        let w = [Vector2::new(0.7, -1.3), Vector2::new(0.2, 0.5)];
        let wz = [0.4, -0.9];
        let f = |v: &[Vector3<f64>]| {
            let p = project(v, &cam);
            (0..2).map(|i| p.points[i].dot(&w[i]) + p.depth[i] * wz[i]).sum::<f64>()
        };
        let mut g = vec![Vector3::zeros(); 2];
        project_vjp(&v, &cam, &w, &wz, &mut g);
        for i in 0..2 {
            for k in 0..3 {
                let mut a = v.clone();
                let mut b = v.clone();
                a[i][k] += 1e-6;
                b[i][k] -= 1e-6;
                let fd = (f(&a) - f(&b)) / 2e-6;
                assert!((fd - g[i][k]).abs() < 1e-6 * fd.abs().max(1.0));
            }
        }
    }
}
