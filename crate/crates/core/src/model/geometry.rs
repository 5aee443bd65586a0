use nalgebra::{Matrix3, Vector3};

use crate::error::Result;

use super::{vertex_normals, CoeffGrad, CoeffVector, FaceBasis};

/// Triangle mesh sharing its topology with a [`FaceBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Vec<Vector3<f64>>,
}

impl Mesh {
    /// Builds a mesh and recomputes its area-weighted vertex normals.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Mesh {
        let normals = vertex_normals(&vertices, &triangles).unit;
        Mesh {
            vertices,
            triangles,
            normals,
        }
    }

    /// Axis-aligned bounding box diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }
}

fn rx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn ry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn drx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn dry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn drz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Rotation from `(pitch, yaw, roll)`: `R = Rz(roll) * Ry(yaw) * Rx(pitch)`.
pub fn rotation_matrix(angles: [f64; 3]) -> Matrix3<f64> {
    let [pitch, yaw, roll] = angles;
    rz(roll) * ry(yaw) * rx(pitch)
}

/// Partial derivatives of [`rotation_matrix`] with respect to pitch, yaw, roll.
pub fn rotation_derivatives(angles: [f64; 3]) -> [Matrix3<f64>; 3] {
    let [pitch, yaw, roll] = angles;
    [
        rz(roll) * ry(yaw) * drx(pitch),
        rz(roll) * dry(yaw) * rx(pitch),
        drz(roll) * ry(yaw) * rx(pitch),
    ]
}

fn gemv_add(out: &mut [f64], basis: &[f64], coeffs: &[f64]) {
    let k = coeffs.len();
    if k == 0 {
        return;
    }
    for (row, o) in basis.chunks_exact(k).zip(out.iter_mut()) {
        *o += row.iter().zip(coeffs).map(|(b, c)| b * c).sum::<f64>();
    }
}

fn gemv_t_add(out: &mut [f64], basis: &[f64], grad: &[f64]) {
    let k = out.len();
    if k == 0 {
        return;
    }
    for (row, g) in basis.chunks_exact(k).zip(grad) {
        if *g == 0.0 {
            continue;
        }
        for (o, b) in out.iter_mut().zip(row) {
            *o += b * g;
        }
    }
}

/// Unposed shape `mean + B_id * beta_id + B_exp * beta_exp`, flat `3 * Nv`.
pub fn assemble_shape(basis: &FaceBasis, coeffs: &CoeffVector) -> Result<Vec<f64>> {
    coeffs.check_dims(basis)?;
    let mut shape = basis.mean_vertices.clone();
    gemv_add(&mut shape, &basis.id_basis, &coeffs.beta_id);
    gemv_add(&mut shape, &basis.exp_basis, &coeffs.beta_exp);
    Ok(shape)
}

pub(crate) fn pose_vertices(shape: &[f64], coeffs: &CoeffVector) -> Vec<Vector3<f64>> {
    let r = rotation_matrix(coeffs.beta_a);
    let t = Vector3::from(coeffs.beta_t);
    shape
        .chunks_exact(3)
        .map(|s| r * Vector3::new(s[0], s[1], s[2]) + t)
        .collect()
}

/// Posed coarse geometry `R(beta_a) (mean + B_id beta_id + B_exp beta_exp) + beta_t`.
pub fn assemble_geometry(basis: &FaceBasis, coeffs: &CoeffVector) -> Result<Mesh> {
    let shape = assemble_shape(basis, coeffs)?;
    Ok(Mesh::new(
        pose_vertices(&shape, coeffs),
        basis.triangles.clone(),
    ))
}

/// Raw (unclamped) per-vertex albedo `T_mean + B_alb * beta_alb`, flat `3 * Nv`.
pub fn assemble_albedo(basis: &FaceBasis, coeffs: &CoeffVector) -> Result<Vec<f64>> {
    coeffs.check_dims(basis)?;
    let mut albedo = basis.albedo_mean.clone();
    gemv_add(&mut albedo, &basis.albedo_basis, &coeffs.beta_alb);
    Ok(albedo)
}

/// Accumulates the albedo-coefficient gradient given `dL/d albedo`.
pub fn assemble_albedo_vjp(basis: &FaceBasis, grad_albedo: &[f64], grad: &mut CoeffGrad) {
    gemv_t_add(&mut grad.beta_alb, &basis.albedo_basis, grad_albedo);
}

/// Accumulates gradients of identity, expression, pose and translation given
/// `dL/dV` for the posed vertices. `shape` is the unposed shape returned by
/// [`assemble_shape`].
pub fn geometry_vjp(
    basis: &FaceBasis,
    coeffs: &CoeffVector,
    shape: &[f64],
    grad_vertices: &[Vector3<f64>],
    grad: &mut CoeffGrad,
) {
    let r = rotation_matrix(coeffs.beta_a);
    let rt = r.transpose();
    let mut grad_r = Matrix3::zeros();
    let mut grad_shape = vec![0.0; shape.len()];
    let mut grad_t = Vector3::zeros();
    for (v, g) in grad_vertices.iter().enumerate() {
        let s = Vector3::new(shape[3 * v], shape[3 * v + 1], shape[3 * v + 2]);
        grad_t += g;
        grad_r += g * s.transpose();
        let gs = rt * g;
        grad_shape[3 * v..3 * v + 3].copy_from_slice(gs.as_slice());
    }
    for (i, d) in rotation_derivatives(coeffs.beta_a).iter().enumerate() {
        grad.beta_a[i] += d.component_mul(&grad_r).sum();
    }
    for i in 0..3 {
        grad.beta_t[i] += grad_t[i];
    }
    gemv_t_add(&mut grad.beta_id, &basis.id_basis, &grad_shape);
    gemv_t_add(&mut grad.beta_exp, &basis.exp_basis, &grad_shape);
}
