//! Second-order spherical-harmonics irradiance shading.

use nalgebra::Vector3;

pub const SH_C0: f64 = 0.28209479;
pub const SH_C1: f64 = 0.48860251;
pub const SH_C2: f64 = 1.09254843;
pub const SH_C2_ZZ: f64 = 0.31539157;
pub const SH_C2_XX_YY: f64 = 0.54627422;

/// Gray albedo used for geometry-only shading, `127 / 255` per channel.
pub const A_GRAY: f64 = 127.0 / 255.0;

/// Albedo source for a shading pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlbedoMode {
    PerVertex,
    ConstantGray,
}

/// Lighting plus albedo selection for one render.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingParams {
    pub sh_coeffs: [f64; 27],
    pub albedo_mode: AlbedoMode,
}

/// The nine real SH basis values of bands 0-2, ordered
/// `(1, y, z, x, xy, yz, 3z^2-1, xz, x^2-y^2)` times their constants.
/// Assumes a unit normal.
#[inline]
pub fn sh_basis(n: &Vector3<f64>) -> [f64; 9] {
    let (x, y, z) = (n.x, n.y, n.z);
    [
        SH_C0,
        SH_C1 * y,
        SH_C1 * z,
        SH_C1 * x,
        SH_C2 * x * y,
        SH_C2 * y * z,
        SH_C2_ZZ * (3.0 * z * z - 1.0),
        SH_C2 * x * z,
        SH_C2_XX_YY * (x * x - y * y),
    ]
}

/// [`sh_basis`] for arbitrary nonzero input; the second value reports
/// whether the normal had to be renormalized (off unit length by more than 1e-6).
pub fn sh_basis_checked(n: &Vector3<f64>) -> ([f64; 9], bool) {
    let len = n.norm();
    if (len - 1.0).abs() > 1e-6 && len > 0.0 {
        (sh_basis(&(n / len)), true)
    } else {
        (sh_basis(n), false)
    }
}

/// Jacobian rows `d basis_k / d n`.
#[inline]
fn sh_basis_jacobian(n: &Vector3<f64>) -> [[f64; 3]; 9] {
    let (x, y, z) = (n.x, n.y, n.z);
    [
        [0.0, 0.0, 0.0],
        [0.0, SH_C1, 0.0],
        [0.0, 0.0, SH_C1],
        [SH_C1, 0.0, 0.0],
        [SH_C2 * y, SH_C2 * x, 0.0],
        [0.0, SH_C2 * z, SH_C2 * y],
        [0.0, 0.0, 6.0 * SH_C2_ZZ * z],
        [SH_C2 * z, 0.0, SH_C2 * x],
        [2.0 * SH_C2_XX_YY * x, -2.0 * SH_C2_XX_YY * y, 0.0],
    ]
}

/// Per-vertex `A ⊙ Σ_k β_k Ψ_k(N)`; `albedo` and the output are flat `3 * Nv`.
pub fn shade(albedo: &[f64], normals: &[Vector3<f64>], sh: &[f64; 27]) -> Vec<f64> {
    shade_with(sh_basis, albedo, normals, sh)
}

/// [`shade`] with a caller-supplied basis, used to exercise self-checks.
pub fn shade_with(
    basis: impl Fn(&Vector3<f64>) -> [f64; 9],
    albedo: &[f64],
    normals: &[Vector3<f64>],
    sh: &[f64; 27],
) -> Vec<f64> {
    let mut out = vec![0.0; albedo.len()];
    for (v, n) in normals.iter().enumerate() {
        let psi = basis(n);
        for c in 0..3 {
            let mut irr = 0.0;
            for k in 0..9 {
                irr += sh[k * 3 + c] * psi[k];
            }
            out[3 * v + c] = albedo[3 * v + c] * irr;
        }
    }
    out
}

/// Gradients of [`shade`]. Albedo and normal gradients are written only when
/// the corresponding output buffer is supplied; SH gradients accumulate.
pub fn shade_vjp(
    albedo: &[f64],
    normals: &[Vector3<f64>],
    sh: &[f64; 27],
    grad_out: &[f64],
    mut grad_albedo: Option<&mut [f64]>,
    mut grad_normals: Option<&mut [Vector3<f64>]>,
    grad_sh: &mut [f64; 27],
) {
    for (v, n) in normals.iter().enumerate() {
        let psi = sh_basis(n);
        let mut g_psi = [0.0; 9];
        for c in 0..3 {
            let g = grad_out[3 * v + c];
            if g == 0.0 {
                continue;
            }
            let a = albedo[3 * v + c];
            let mut irr = 0.0;
            for k in 0..9 {
                irr += sh[k * 3 + c] * psi[k];
                grad_sh[k * 3 + c] += g * a * psi[k];
                g_psi[k] += g * a * sh[k * 3 + c];
            }
            if let Some(ga) = grad_albedo.as_deref_mut() {
                ga[3 * v + c] += g * irr;
            }
        }
        if let Some(gn) = grad_normals.as_deref_mut() {
            let jac = sh_basis_jacobian(n);
            let mut acc = Vector3::zeros();
            for k in 0..9 {
                acc += Vector3::from(jac[k]) * g_psi[k];
            }
            gn[v] += acc;
        }
    }
}
