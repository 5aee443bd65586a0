//! License-free stand-in for a scanned face model.
//!
//! The head is a geodesic sphere pushed onto an ellipsoid with nose, brow,
//! cheek, chin and lip bulges. Directions use the camera frame of the
//! renderer: `+x` is image right, `+y` is image down, and the face looks
//! toward `-z`. Azimuth is measured from the face front toward `+x` and
//! elevation is positive toward the top of the head.

use std::collections::HashMap;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{ContourLine, FaceBasis, FacePart, LANDMARK_COUNT};

/// Parameters of [`synthetic_basis`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticBasisSpec {
    pub seed: u64,
    /// Approximate vertex count; the geodesic sphere has `10 n^2 + 2` vertices.
    pub vertex_target: usize,
    pub k_id: usize,
    pub k_exp: usize,
    pub k_alb: usize,
}

impl Default for SyntheticBasisSpec {
    fn default() -> Self {
        SyntheticBasisSpec {
            seed: 0,
            vertex_target: 1002,
            k_id: 80,
            k_exp: 64,
            k_alb: 80,
        }
    }
}

/// Mean albedo of the synthetic model, equal to the gray shading albedo.
pub const SYNTHETIC_ALBEDO: f64 = 127.0 / 255.0;

fn deg(x: f64) -> f64 {
    x.to_radians()
}

/// Unit direction for an (azimuth, elevation) pair in radians.
pub(crate) fn direction(azimuth: f64, elevation: f64) -> Vector3<f64> {
    Vector3::new(
        elevation.cos() * azimuth.sin(),
        -elevation.sin(),
        -elevation.cos() * azimuth.cos(),
    )
}

/// (azimuth, elevation) of a unit direction.
pub(crate) fn angles_of(d: &Vector3<f64>) -> (f64, f64) {
    (d.x.atan2(-d.z), (-d.y).clamp(-1.0, 1.0).asin())
}

fn icosahedron() -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::new();
    for &a in &[-1.0, 1.0] {
        for &b in &[-phi, phi] {
            v.push(Vector3::new(0.0, a, b));
            v.push(Vector3::new(a, b, 0.0));
            v.push(Vector3::new(b, 0.0, a));
        }
    }
    let mut faces = Vec::new();
    let adjacent = |i: usize, j: usize| ((v[i] - v[j]).norm() - 2.0).abs() < 1e-9;
    for i in 0..12 {
        for j in i + 1..12 {
            for k in j + 1..12 {
                if adjacent(i, j) && adjacent(j, k) && adjacent(i, k) {
                    let n = (v[j] - v[i]).cross(&(v[k] - v[i]));
                    if n.dot(&(v[i] + v[j] + v[k])) > 0.0 {
                        faces.push([i as u32, j as u32, k as u32]);
                    } else {
                        faces.push([i as u32, k as u32, j as u32]);
                    }
                }
            }
        }
    }
    let v = v.into_iter().map(|p| p.normalize()).collect();
    (v, faces)
}

/// Geodesic sphere of frequency `n` (`10 n^2 + 2` vertices), outward wound.
pub(crate) fn geodesic_sphere(n: usize) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let (corners, faces) = icosahedron();
    let mut index: HashMap<Vec<(u32, usize)>, u32> = HashMap::new();
    let mut dirs: Vec<Vector3<f64>> = Vec::new();
    let mut tris = Vec::new();
    let mut vertex = |weights: [(u32, usize); 3]| -> u32 {
        let mut key: Vec<(u32, usize)> = weights.iter().copied().filter(|w| w.1 > 0).collect();
        key.sort_unstable();
        *index.entry(key.clone()).or_insert_with(|| {
            let mut p = Vector3::zeros();
            for (c, w) in &key {
                p += corners[*c as usize] * (*w as f64 / n as f64);
            }
            dirs.push(p.normalize());
            (dirs.len() - 1) as u32
        })
    };
    for f in &faces {
        let [a, b, c] = *f;
        let mut grid = vec![vec![0u32; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n - i {
                grid[i][j] = vertex([(a, n - i - j), (b, i), (c, j)]);
            }
        }
        for i in 0..n {
            for j in 0..n - i {
                tris.push([grid[i][j], grid[i + 1][j], grid[i][j + 1]]);
                if i + j + 1 < n {
                    tris.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                }
            }
        }
    }
    (dirs, tris)
}

fn bump(az: f64, el: f64, caz: f64, cel: f64, waz: f64, wel: f64) -> f64 {
    let a = (az - caz) / waz;
    let e = (el - cel) / wel;
    (-0.5 * (a * a + e * e)).exp()
}

/// Radial offset that turns the ellipsoid into a head with facial relief.
fn relief(az: f64, el: f64) -> f64 {
    let mut r = 0.0;
    r += 0.22 * bump(az, el, 0.0, deg(-6.0), 0.16, 0.22);
    r += 0.05 * (-0.5 * ((el - deg(19.0)) / 0.08).powi(2)).exp() * (-(az / 0.45).powi(4)).exp();
    for side in [-1.0, 1.0] {
        r -= 0.04 * bump(az, el, side * deg(20.0), deg(8.0), 0.12, 0.08);
        r += 0.03 * bump(az, el, side * deg(34.0), deg(-4.0), 0.2, 0.15);
    }
    r += 0.04 * bump(az, el, 0.0, deg(-55.0), 0.25, 0.15);
    r += 0.03 * bump(az, el, 0.0, deg(-30.0), 0.22, 0.07);
    r
}

fn head_point(d: &Vector3<f64>) -> Vector3<f64> {
    let (az, el) = angles_of(d);
    let e = Vector3::new(0.75 * d.x, 0.92 * d.y, 0.85 * d.z);
    e + d * relief(az, el)
}

/// Azimuthal equidistant unwrap centered on the face front; the back of the
/// head maps onto the rim of the unit disk inscribed in the UV square.
fn uv_of(d: &Vector3<f64>) -> [f64; 2] {
    let theta = (-d.z).clamp(-1.0, 1.0).acos();
    let rho = (d.x * d.x + d.y * d.y).sqrt();
    if rho < 1e-15 {
        return [0.5, 0.5];
    }
    let r = 0.5 * theta / std::f64::consts::PI;
    [
        (0.5 + r * d.x / rho).clamp(0.0, 1.0),
        (0.5 + r * d.y / rho).clamp(0.0, 1.0),
    ]
}

fn part_of(az: f64, el: f64) -> Option<FacePart> {
    let (a, e) = (az.to_degrees(), el.to_degrees());
    let ellipse = |ca: f64, ce: f64, ra: f64, re: f64| {
        ((a - ca) / ra).powi(2) + ((e - ce) / re).powi(2) <= 1.0
    };
    if ellipse(-20.0, 8.0, 11.0, 6.0) {
        Some(FacePart::LeftEye)
    } else if ellipse(20.0, 8.0, 11.0, 6.0) {
        Some(FacePart::RightEye)
    } else if (-40.0..=-6.0).contains(&a) && (15.0..=26.0).contains(&e) {
        Some(FacePart::LeftEyebrow)
    } else if (6.0..=40.0).contains(&a) && (15.0..=26.0).contains(&e) {
        Some(FacePart::RightEyebrow)
    } else if a.abs() <= 12.0 && (-20.0..=6.0).contains(&e) {
        Some(FacePart::Nose)
    } else if a.abs() <= 18.0 && (-31.0..=-25.0).contains(&e) {
        Some(FacePart::UpLip)
    } else if a.abs() <= 18.0 && (-38.0..-31.0).contains(&e) {
        Some(FacePart::DownLip)
    } else if a.abs() <= 75.0 && (-62.0..=40.0).contains(&e) {
        Some(FacePart::Skin)
    } else {
        None
    }
}

/// Number of cheek-contour landmarks; they occupy slots `0..CONTOUR_LANDMARKS`.
pub(crate) const CONTOUR_LANDMARKS: usize = 41;

/// Landmark target positions as (azimuth, elevation) in degrees.
fn landmark_targets() -> Vec<(f64, f64)> {
    let mut t = Vec::with_capacity(LANDMARK_COUNT);
    // Cheek contour from the left temple around the chin to the right temple.
    for i in 0..CONTOUR_LANDMARKS {
        let a = std::f64::consts::PI * i as f64 / (CONTOUR_LANDMARKS - 1) as f64;
        t.push((-72.0 * a.cos(), 15.0 - 73.0 * a.sin()));
    }
    for side in [-1.0, 1.0] {
        for i in 0..20 {
            let s = i as f64 / 19.0;
            let a = -38.0 + 30.0 * s;
            t.push((side * -a, 20.0 + 4.0 * (std::f64::consts::PI * s).sin()));
        }
    }
    for side in [-1.0, 1.0] {
        for i in 0..24 {
            let a = std::f64::consts::TAU * i as f64 / 24.0;
            t.push((side * 20.0 + 9.0 * a.cos(), 8.0 + 4.0 * a.sin()));
        }
    }
    for i in 0..10 {
        t.push((0.0, 8.0 - 20.0 * i as f64 / 9.0));
    }
    for i in 0..30 {
        let a = std::f64::consts::PI * i as f64 / 29.0;
        t.push((-12.0 * a.cos(), -12.0 - 6.0 * a.sin()));
    }
    for i in 0..20 {
        let s = i as f64 / 19.0;
        let a = -16.0 + 32.0 * s;
        t.push((a, -28.0 + 3.0 * (std::f64::consts::PI * s).sin()));
    }
    for i in 0..20 {
        let s = i as f64 / 19.0;
        let a = -16.0 + 32.0 * s;
        t.push((a, -34.0 - 3.0 * (std::f64::consts::PI * s).sin()));
    }
    for i in 0..11 {
        t.push((-30.0 + 6.0 * i as f64, 35.0));
    }
    for side in [-1.0, 1.0] {
        for i in 0..10 {
            t.push((side * 35.0, -10.0 - 30.0 * i as f64 / 9.0));
        }
    }
    debug_assert_eq!(t.len(), LANDMARK_COUNT);
    t
}

fn assign_landmarks(dirs: &[Vector3<f64>], targets: &[(f64, f64)]) -> Vec<u32> {
    let mut used = vec![false; dirs.len()];
    targets
        .iter()
        .map(|&(a, e)| {
            let target = direction(deg(a), deg(e));
            let best = dirs
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i] || dirs.len() < LANDMARK_COUNT)
                .max_by(|(_, p), (_, q)| p.dot(&target).total_cmp(&q.dot(&target)))
                .map(|(i, _)| i)
                .unwrap_or(0);
            used[best] = true;
            best as u32
        })
        .collect()
}

fn contour_lines(dirs: &[Vector3<f64>], landmarks: &[u32], spacing: f64) -> Vec<ContourLine> {
    let angles: Vec<(f64, f64)> = dirs.iter().map(angles_of).collect();
    let mut lines = Vec::new();
    for slot in 0..CONTOUR_LANDMARKS {
        let default = landmarks[slot];
        let (az0, el0) = angles[default as usize];
        if az0.abs() < deg(20.0) {
            continue;
        }
        let side = az0.signum();
        let mut band = spacing.max(deg(4.0));
        let mut candidates: Vec<u32> = Vec::new();
        while candidates.len() < 2 && band < deg(45.0) {
            candidates = (0..dirs.len() as u32)
                .filter(|&v| {
                    let (az, el) = angles[v as usize];
                    (el - el0).abs() <= band
                        && az.signum() == side
                        && (deg(10.0)..=deg(110.0)).contains(&az.abs())
                })
                .collect();
            band *= 1.5;
        }
        if !candidates.contains(&default) {
            candidates.push(default);
        }
        candidates.sort_by(|&a, &b| {
            angles[a as usize]
                .0
                .abs()
                .total_cmp(&angles[b as usize].0.abs())
                .then(a.cmp(&b))
        });
        lines.push(ContourLine {
            slot: slot as u32,
            candidates,
        });
    }
    lines
}

/// Builds a random smooth vector field from a few Gaussian bumps.
fn bump_field(
    rng: &mut ChaCha8Rng,
    dirs: &[Vector3<f64>],
    centers: &[(f64, f64)],
    width: (f64, f64),
    jitter: f64,
    scalar_color: bool,
) -> Vec<f64> {
    let mut field = vec![0.0; 3 * dirs.len()];
    let bumps = rng.random_range(3..=6);
    for _ in 0..bumps {
        let (az, el) = if centers.is_empty() {
            let z: f64 = rng.random_range(-1.0..1.0);
            let a: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            (a, z.asin())
        } else {
            let (a, e) = centers[rng.random_range(0..centers.len())];
            (
                deg(a + rng.random_range(-jitter..=jitter)),
                deg(e + rng.random_range(-jitter..=jitter)),
            )
        };
        let c = direction(az, el);
        let w: f64 = rng.random_range(width.0..width.1);
        let amp: f64 = rng.random_range(-1.0..1.0);
        let axis = if scalar_color {
            Vector3::new(
                1.0 + rng.random_range(-0.3..0.3),
                0.8 + rng.random_range(-0.3..0.3),
                0.7 + rng.random_range(-0.3..0.3),
            )
        } else {
            Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        };
        for (v, d) in dirs.iter().enumerate() {
            let g = amp * (-(d - c).norm_squared() / (2.0 * w * w)).exp();
            for k in 0..3 {
                field[3 * v + k] += g * axis[k];
            }
        }
    }
    field
}

/// Modified Gram-Schmidt with re-orthogonalization; returns unit columns.
fn orthonormalize(columns: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for (k, mut col) in columns.into_iter().enumerate() {
        let initial = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for q in &out {
                let p: f64 = q.iter().zip(&col).map(|(a, b)| a * b).sum();
                for (c, qv) in col.iter_mut().zip(q) {
                    *c -= p * qv;
                }
            }
        }
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-6 * initial) {
            return Err(Error::InvalidBasis(format!(
                "basis column {k} is linearly dependent on earlier columns; reduce the \
                 component counts or raise the vertex count"
            )));
        }
        col.iter_mut().for_each(|c| *c /= norm);
        out.push(col);
    }
    Ok(out)
}

fn to_row_major(columns: &[Vec<f64>], scales: impl Fn(usize) -> f64, rows: usize) -> Vec<f64> {
    let k = columns.len();
    let mut m = vec![0.0; rows * k];
    for (j, col) in columns.iter().enumerate() {
        let s = scales(j);
        for (r, v) in col.iter().enumerate() {
            m[r * k + j] = v * s;
        }
    }
    m
}

/// Deterministic synthetic morphable model.
pub fn synthetic_basis(spec: &SyntheticBasisSpec) -> Result<FaceBasis> {
    if spec.vertex_target < 12 {
        return Err(Error::InvalidArgument(format!(
            "synthetic basis needs at least 12 vertices, asked for {}",
            spec.vertex_target
        )));
    }
    let freq = (((spec.vertex_target - 2) as f64 / 10.0).sqrt().round() as usize).max(1);
    let (dirs, triangles) = geodesic_sphere(freq);
    let nv = dirs.len();
    if spec.k_id + spec.k_exp > 3 * nv || spec.k_alb > 3 * nv {
        return Err(Error::InvalidArgument(format!(
            "{nv} vertices cannot carry {} shape and {} albedo components",
            spec.k_id + spec.k_exp,
            spec.k_alb
        )));
    }
    let mean_vertices: Vec<f64> = dirs
        .iter()
        .flat_map(|d| {
            let p = head_point(d);
            [p.x, p.y, p.z]
        })
        .collect();
    let uv_coords = dirs.iter().map(uv_of).collect();
    let part_membership = dirs
        .iter()
        .map(|d| {
            let (az, el) = angles_of(d);
            part_of(az, el)
        })
        .collect();
    let landmark_indices = assign_landmarks(&dirs, &landmark_targets());
    let spacing = (4.0 * std::f64::consts::PI / nv as f64).sqrt();
    let contour_candidates = contour_lines(&dirs, &landmark_indices, spacing);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let expression_centers = [
        (0.0, -30.0),
        (-20.0, 8.0),
        (20.0, 8.0),
        (-20.0, 20.0),
        (20.0, 20.0),
        (-35.0, -20.0),
        (35.0, -20.0),
        (0.0, -50.0),
    ];
    let mut shape_cols = Vec::with_capacity(spec.k_id + spec.k_exp);
    for _ in 0..spec.k_id {
        shape_cols.push(bump_field(&mut rng, &dirs, &[], (0.35, 0.9), 0.0, false));
    }
    for _ in 0..spec.k_exp {
        shape_cols.push(bump_field(&mut rng, &dirs, &expression_centers, (0.15, 0.4), 8.0, false));
    }
    let shape_cols = orthonormalize(shape_cols)?;
    let mut albedo_cols = Vec::with_capacity(spec.k_alb);
    for _ in 0..spec.k_alb {
        albedo_cols.push(bump_field(&mut rng, &dirs, &[], (0.2, 0.8), 0.0, true));
    }
    let albedo_cols = orthonormalize(albedo_cols)?;

    let root_nv = (nv as f64).sqrt();
    let decay = |k: usize| (-(k as f64) / 30.0).exp();
    let id_basis = to_row_major(&shape_cols[..spec.k_id], |k| 0.04 * decay(k) * root_nv, 3 * nv);
    let exp_basis = to_row_major(&shape_cols[spec.k_id..], |k| 0.03 * decay(k) * root_nv, 3 * nv);
    let albedo_basis = to_row_major(&albedo_cols, |k| 0.05 * decay(k) * root_nv, 3 * nv);

    let basis = FaceBasis {
        mean_vertices,
        id_basis,
        exp_basis,
        albedo_mean: vec![SYNTHETIC_ALBEDO; 3 * nv],
        albedo_basis,
        triangles,
        uv_coords,
        landmark_indices,
        part_membership,
        contour_candidates,
        k_id: spec.k_id,
        k_exp: spec.k_exp,
        k_alb: spec.k_alb,
    };
    basis.validate()?;
    Ok(basis)
}
