use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::normals::normalize_vjp;
use crate::model::Mesh;
use crate::render::{project, rasterize_fragments, CameraSpec, RasterSettings};
use crate::uv::atlas::UvAtlas;
use crate::uv::map::{UvMap, UvSemantic};

/// Forward-difference stencil along one grid axis: `plus - minus`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Stencil {
    plus: u32,
    minus: u32,
}

/// Normal map of a position map plus what is needed to differentiate it.
#[derive(Clone, Debug)]
pub struct UvNormals {
    pub map: UvMap,
    /// Valid texels whose tangents vanished; they copy the nearest good normal.
    pub degenerate: Vec<u32>,
    orientation: f64,
    stencils: Vec<Option<(Stencil, Stencil)>>,
    raw: Vec<Vector3<f64>>,
    /// Texel whose computed normal each valid texel uses.
    source: Vec<u32>,
}

#[inline]
fn vec_at(map: &UvMap, t: u32) -> Vector3<f64> {
    let s = map.texel(t as usize);
    Vector3::new(s[0], s[1], s[2])
}

fn axis_stencil(valid: &dyn Fn(isize, isize) -> bool, r: isize, c: isize, dr: isize, dc: isize, size: isize) -> Option<Stencil> {
    let idx = |r: isize, c: isize| (r * size + c) as u32;
    let fwd = valid(r + dr, c + dc);
    let bwd = valid(r - dr, c - dc);
    match (fwd, bwd) {
        (true, true) => Some(Stencil { plus: idx(r + dr, c + dc), minus: idx(r - dr, c - dc) }),
        (true, false) => Some(Stencil { plus: idx(r + dr, c + dc), minus: idx(r, c) }),
        (false, true) => Some(Stencil { plus: idx(r, c), minus: idx(r - dr, c - dc) }),
        (false, false) => None,
    }
}

/// Normals of a position map from central-difference tangents
/// `dV/du x dV/dv`, one-sided next to invalid texels, oriented by the atlas.
pub fn uv_normals(positions: &UvMap, orientation: f64) -> Result<UvNormals> {
    if positions.channels() != 3 {
        return Err(Error::dims("position map channels", 3, positions.channels()));
    }
    let size = positions.size();
    let n = size * size;
    let s = size as isize;
    let valid = |r: isize, c: isize| r >= 0 && c >= 0 && r < s && c < s && positions.validity[(r * s + c) as usize] > 0.0;
    let mut map = UvMap::new(size, 3, UvSemantic::Normal);
    map.validity.copy_from_slice(&positions.validity);
    let mut stencils = vec![None; n];
    let mut raw = vec![Vector3::zeros(); n];
    let mut good = vec![false; n];
    let mut degenerate = Vec::new();
    for t in 0..n {
        if positions.validity[t] <= 0.0 {
            continue;
        }
        let (r, c) = ((t / size) as isize, (t % size) as isize);
        let su = axis_stencil(&valid, r, c, 0, 1, s);
        let sv = axis_stencil(&valid, r, c, 1, 0, s);
        if let (Some(su), Some(sv)) = (su, sv) {
            let tu = vec_at(positions, su.plus) - vec_at(positions, su.minus);
            let tv = vec_at(positions, sv.plus) - vec_at(positions, sv.minus);
            let m = tu.cross(&tv) * orientation;
            let len = m.norm();
            if len > 0.0 && len.is_finite() {
                stencils[t] = Some((su, sv));
                raw[t] = m;
                map.texel_mut(t).copy_from_slice((m / len).as_slice());
                good[t] = true;
                continue;
            }
        }
        degenerate.push(t as u32);
    }
    let mut source: Vec<u32> = (0..n as u32).collect();
    for &t in &degenerate {
        let (r, c) = ((t as usize / size) as isize, (t as usize % size) as isize);
        let mut found = None;
        'rings: for radius in 1..s {
            for y in (r - radius)..=(r + radius) {
                for x in (c - radius)..=(c + radius) {
                    if x < 0 || y < 0 || x >= s || y >= s || (x - c).abs().max((y - r).abs()) != radius {
                        continue;
                    }
                    let u = (y * s + x) as usize;
                    if good[u] {
                        found = Some(u);
                        break 'rings;
                    }
                }
            }
        }
        match found {
            Some(u) => {
                source[t as usize] = u as u32;
                let nrm: Vec<f64> = map.texel(u).to_vec();
                map.texel_mut(t as usize).copy_from_slice(&nrm);
            }
            None => map.texel_mut(t as usize).copy_from_slice(&[0.0, 0.0, 1.0]),
        }
    }
    Ok(UvNormals {
        map,
        degenerate,
        orientation,
        stencils,
        raw,
        source,
    })
}

impl UvNormals {
    /// Accumulates `dL/d positions` (flat, 3 per texel) given `dL/d normals`.
    pub fn vjp(&self, positions: &UvMap, grad_normals: &[f64], grad_positions: &mut [f64]) {
        let n = self.stencils.len();
        let mut g_unit = vec![Vector3::zeros(); n];
        for t in 0..n {
            let g = Vector3::new(grad_normals[3 * t], grad_normals[3 * t + 1], grad_normals[3 * t + 2]);
            if g != Vector3::zeros() && self.map.validity[t] > 0.0 {
                g_unit[self.source[t] as usize] += g;
            }
        }
        for t in 0..n {
            let Some((su, sv)) = self.stencils[t] else { continue };
            if g_unit[t] == Vector3::zeros() {
                continue;
            }
            let unit = vec_at(&self.map, t as u32);
            let g = normalize_vjp(&self.raw[t], &unit, &g_unit[t]) * self.orientation;
            let tu = vec_at(positions, su.plus) - vec_at(positions, su.minus);
            let tv = vec_at(positions, sv.plus) - vec_at(positions, sv.minus);
            let gu = tv.cross(&g);
            let gv = g.cross(&tu);
            for (idx, d) in [(su.plus, gu), (su.minus, -gu), (sv.plus, gv), (sv.minus, -gv)] {
                let i = 3 * idx as usize;
                grad_positions[i] += d.x;
                grad_positions[i + 1] += d.y;
                grad_positions[i + 2] += d.z;
            }
        }
    }
}

/// `V' = V + beta_d * D * N` per valid texel.
pub fn apply_displacement(positions: &UvMap, disp: &[f64], normals: &UvMap, beta_d: f64) -> Result<UvMap> {
    let n = positions.size() * positions.size();
    if disp.len() != n {
        return Err(Error::dims("displacement grid", n, disp.len()));
    }
    if normals.size() != positions.size() || normals.channels() != 3 || positions.channels() != 3 {
        return Err(Error::dims("normal map texels", 3 * n, normals.values.data.len()));
    }
    let mut out = positions.clone();
    for t in 0..n {
        if positions.validity[t] <= 0.0 {
            continue;
        }
        let d = beta_d * disp[t];
        let nrm = normals.texel(t);
        let o = out.texel_mut(t);
        for c in 0..3 {
            o[c] += d * nrm[c];
        }
    }
    Ok(out)
}

/// Gradients of [`apply_displacement`].
pub struct DisplacementGrad {
    pub positions: Vec<f64>,
    pub disp: Vec<f64>,
    pub normals: Vec<f64>,
    pub beta_d: f64,
}

pub fn apply_displacement_vjp(
    positions: &UvMap,
    disp: &[f64],
    normals: &UvMap,
    beta_d: f64,
    grad_out: &[f64],
) -> DisplacementGrad {
    let n = positions.size() * positions.size();
    let mut g = DisplacementGrad {
        positions: grad_out.to_vec(),
        disp: vec![0.0; n],
        normals: vec![0.0; 3 * n],
        beta_d: 0.0,
    };
    for t in 0..n {
        if positions.validity[t] <= 0.0 {
            g.positions[3 * t..3 * t + 3].fill(0.0);
            continue;
        }
        let go = &grad_out[3 * t..3 * t + 3];
        let nrm = normals.texel(t);
        let dot = go[0] * nrm[0] + go[1] * nrm[1] + go[2] * nrm[2];
        g.disp[t] = beta_d * dot;
        g.beta_d += disp[t] * dot;
        for c in 0..3 {
            g.normals[3 * t + c] = beta_d * disp[t] * go[c];
        }
    }
    g
}

/// Samples `image` into UV space through the mesh: each covered texel whose
/// surface point projects inside the frame is bilinearly sampled. Validity
/// is 1 where that point also passes a z-buffer visibility test with
/// tolerance `1e-3 * (far - near)`, 0 elsewhere.
pub fn image_to_uv(image: &Image, mesh: &Mesh, atlas: &UvAtlas, cam: &CameraSpec) -> Result<UvMap> {
    if image.width != cam.width || image.height != cam.height {
        return Err(Error::dims("image width", cam.width, image.width));
    }
    let proj = project(&mesh.vertices, cam);
    let mut settings = RasterSettings::for_camera(cam);
    settings.sigma = 1e-4;
    let frags = rasterize_fragments(&proj, &mesh.triangles, cam, &settings)?;
    let tol = 1e-3 * cam.depth_range();
    let mut map = UvMap::new(atlas.size, image.channels, UvSemantic::Color);
    for (t, texel) in atlas.texels.iter().enumerate() {
        let Some(r) = texel else { continue };
        let mut p = Vector3::zeros();
        for k in 0..3 {
            p += mesh.vertices[r.verts[k] as usize] * r.bary[k];
        }
        if p.z <= cam.near {
            continue;
        }
        let u = cam.focal * p.x / p.z + cam.principal_point[0];
        let v = cam.focal * p.y / p.z + cam.principal_point[1];
        if !(u >= 0.0 && v >= 0.0 && u < cam.width as f64 && v < cam.height as f64) {
            continue;
        }
        let pix = (v as usize) * cam.width + u as usize;
        if frags.face_id[pix].is_some() && p.z <= frags.depth[pix] + tol {
            map.validity[t] = 1.0;
        }
        let out = map.texel_mut(t);
        for (c, o) in out.iter_mut().enumerate() {
            *o = image.sample_bilinear(u, v, c);
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_map(size: usize, f: impl Fn(f64, f64) -> [f64; 3]) -> UvMap {
        let mut m = UvMap::new(size, 3, UvSemantic::Position);
        for t in 0..size * size {
            let (r, c) = (t / size, t % size);
            let p = f((c as f64 + 0.5) / size as f64, (r as f64 + 0.5) / size as f64);
            m.texel_mut(t).copy_from_slice(&p);
            m.validity[t] = 1.0;
        }
        m
    }

    #[test]
    fn plane_has_axis_normals() {
        let m = grid_map(16, |u, v| [2.0 * u, 3.0 * v, 0.0]);
        let n = uv_normals(&m, 1.0).unwrap();
        for t in 0..256 {
            assert_eq!(n.map.texel(t), &[0.0, 0.0, 1.0]);
        }
        let flipped = uv_normals(&m, -1.0).unwrap();
        assert_eq!(flipped.map.texel(7), &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn sphere_normals_are_nearly_radial() {
        // Patch of a unit sphere parameterized by longitude and latitude.
        let m = grid_map(64, |u, v| {
            let (lon, lat) = ((u - 0.5) * 2.0, (v - 0.5) * 2.0);
            [lat.cos() * lon.sin(), lat.sin(), lat.cos() * lon.cos()]
        });
        let n = uv_normals(&m, 1.0).unwrap();
        for t in 0..64 * 64 {
            let p = vec_at(&m, t as u32);
            let q = vec_at(&n.map, t as u32);
            let angle = p.normalize().dot(&q).abs().clamp(-1.0, 1.0).acos().to_degrees();
            assert!(angle < 5.0, "texel {t}: {angle} degrees");
        }
    }

    #[test]
    fn normals_vjp_matches_finite_differences() {
        let size = 6;
        let mut m = grid_map(size, |u, v| [u + 0.1 * (5.0 * v).sin(), v + 0.2 * u * u, 0.3 * (u * 4.0).cos() * v]);
        m.validity[0] = 0.0;
        m.validity[size + 3] = 0.0;
        let w: Vec<f64> = (0..3 * size * size).map(|i| ((i * 13 % 17) as f64) / 8.0 - 1.0).collect();
        let f = |m: &UvMap| -> f64 {
            let n = uv_normals(m, -1.0).unwrap();
            n.map.values.data.iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        let n = uv_normals(&m, -1.0).unwrap();
        let mut g = vec![0.0; 3 * size * size];
        n.vjp(&m, &w, &mut g);
        let h = 1e-6;
        for i in 0..g.len() {
            let mut a = m.clone();
            let mut b = m.clone();
            a.values.data[i] += h;
            b.values.data[i] -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(1.0), "entry {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn zero_displacement_is_identity() {
        let m = grid_map(8, |u, v| [u, v, u * v]);
        let n = uv_normals(&m, 1.0).unwrap();
        let out = apply_displacement(&m, &vec![0.0; 64], &n.map, 0.7).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn single_texel_moves_along_its_normal() {
        let m = grid_map(4, |u, v| [u, v, 0.0]);
        let n = uv_normals(&m, 1.0).unwrap();
        let mut d = vec![0.0; 16];
        d[5] = 1.0;
        let out = apply_displacement(&m, &d, &n.map, 0.5).unwrap();
        let moved: Vec<f64> = out.texel(5).iter().zip(m.texel(5)).map(|(a, b)| a - b).collect();
        assert_eq!(moved, vec![0.0, 0.0, 0.5]);
        for t in (0..16).filter(|&t| t != 5) {
            assert_eq!(out.texel(t), m.texel(t));
        }
    }

    #[test]
    fn displacement_vjp_matches_finite_differences() {
        let m = grid_map(4, |u, v| [u, v * v, u - v]);
        let n = uv_normals(&m, 1.0).unwrap();
        let d: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let w: Vec<f64> = (0..48).map(|i| (i as f64 * 0.3).cos()).collect();
        let beta = 0.8;
        let f = |pos: &UvMap, d: &[f64], nm: &UvMap, b: f64| -> f64 {
            let o = apply_displacement(pos, d, nm, b).unwrap();
            o.values.data.iter().zip(&w).map(|(a, c)| a * c).sum()
        };
        let g = apply_displacement_vjp(&m, &d, &n.map, beta, &w);
        let h = 1e-6;
        let fd = (f(&m, &d, &n.map, beta + h) - f(&m, &d, &n.map, beta - h)) / (2.0 * h);
        assert!((fd - g.beta_d).abs() < 1e-8);
        for i in 0..16 {
            let mut a = d.clone();
            let mut b = d.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (f(&m, &a, &n.map, beta) - f(&m, &b, &n.map, beta)) / (2.0 * h);
            assert!((fd - g.disp[i]).abs() < 1e-8);
        }
        for i in 0..48 {
            let mut a = n.map.clone();
            let mut b = n.map.clone();
            a.values.data[i] += h;
            b.values.data[i] -= h;
            let fd = (f(&m, &d, &a, beta) - f(&m, &d, &b, beta)) / (2.0 * h);
            assert!((fd - g.normals[i]).abs() < 1e-8);
        }
    }
}
