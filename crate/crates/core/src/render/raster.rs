//! Soft rasterization with sigmoid coverage and depth-softmax blending.
//!
//! Coverage of triangle `i` at a pixel is `sigmoid(s * d^2 / sigma)` where `d`
//! is the distance from the pixel center to the projected triangle boundary
//! and `s` is `+1` inside, `-1` outside. Front-facing fragments are blended
//! with weights `cov_i * exp(z_i / gamma)` against a background weight
//! `exp(eps / gamma)`, where `z_i` is the normalized closeness
//! `(far - depth) / (far - near)`. Every fragment, back faces included,
//! contributes to the silhouette `1 - prod(1 - cov_i)`.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::render::camera::{CameraSpec, Projection};

/// `ln(1e-6)`: fragments with a smaller coverage logit are dropped.
const MIN_LOGIT: f64 = -13.815510557964274;

/// Softness and blending parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RasterSettings {
    /// Coverage softness in squared pixels.
    pub sigma: f64,
    /// Blend temperature as a fraction of the camera depth range.
    pub gamma: f64,
    /// Normalized closeness assigned to the background.
    pub background_eps: f64,
    pub background: [f64; 3],
}

impl RasterSettings {
    /// Defaults `sigma = 1e-5 (H^2 + W^2)` and `gamma = 1e-4` of the depth range.
    pub fn for_camera(cam: &CameraSpec) -> RasterSettings {
        let (h, w) = (cam.height as f64, cam.width as f64);
        RasterSettings {
            sigma: 1e-5 * (h * h + w * w),
            gamma: 1e-4,
            background_eps: 1e-3,
            background: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "raster sigma and gamma must be positive, got {} and {}",
                self.sigma, self.gamma
            )));
        }
        Ok(())
    }
}

/// One triangle's contribution to one pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fragment {
    pub tri: u32,
    pub front: bool,
    pub inside: bool,
    /// Edge holding the closest boundary point, and its segment parameter.
    pub edge: u8,
    pub t: f64,
    pub coverage: f64,
    /// Normalized closeness `(far - depth) / (far - near)`.
    pub closeness: f64,
    /// Clamped, renormalized barycentrics.
    pub bary: [f64; 3],
    /// `exp((closeness - m) / gamma) / W`, zero for back faces.
    pub exp_over_sum: f64,
    /// Normalized blend weight `coverage * exp_over_sum`.
    pub weight: f64,
}

/// Per-pixel fragment lists for a fixed geometry, reusable across colorings.
#[derive(Clone, Debug)]
pub struct Fragments {
    pub width: usize,
    pub height: usize,
    /// `fragments[offsets[p]..offsets[p + 1]]` belong to pixel `p`, in triangle order.
    pub offsets: Vec<usize>,
    pub fragments: Vec<Fragment>,
    pub background_weight: Vec<f64>,
    pub silhouette: Vec<f64>,
    pub face_id: Vec<Option<u32>>,
    pub barycentrics: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    pub settings: RasterSettings,
    pub near: f64,
    pub far: f64,
}

/// Product of one render.
#[derive(Clone, Debug)]
pub struct RasterOutput {
    pub color: Image,
    pub silhouette: Image,
    pub face_id: Vec<Option<u32>>,
    pub barycentrics: Vec<[f64; 3]>,
    pub depth: Image,
}

/// Gradients with respect to each fragment's soft quantities.
#[derive(Clone, Debug, Default)]
pub struct FragmentGrad {
    pub coverage: Vec<f64>,
    pub closeness: Vec<f64>,
    pub bary: Vec<[f64; 3]>,
}

impl FragmentGrad {
    pub fn zeros(frags: &Fragments) -> FragmentGrad {
        let n = frags.fragments.len();
        FragmentGrad {
            coverage: vec![0.0; n],
            closeness: vec![0.0; n],
            bary: vec![[0.0; 3]; n],
        }
    }

    pub fn clear(&mut self) {
        self.coverage.iter_mut().for_each(|g| *g = 0.0);
        self.closeness.iter_mut().for_each(|g| *g = 0.0);
        self.bary.iter_mut().for_each(|g| *g = [0.0; 3]);
    }
}

#[inline]
fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Closest point on segment `a -> b` to `p`: `(squared distance, t)`.
#[inline]
fn segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p - (a + ab * t)).norm_squared(), t)
}

/// Raw barycentrics of `p` with respect to `(p0, p1, p2)` given the doubled area.
#[inline]
fn raw_barycentrics(p: Vector2<f64>, v: [Vector2<f64>; 3], area2: f64) -> [f64; 3] {
    [
        cross(v[1] - p, v[2] - p) / area2,
        cross(v[2] - p, v[0] - p) / area2,
        cross(v[0] - p, v[1] - p) / area2,
    ]
}

#[inline]
fn clamp_barycentrics(b: [f64; 3]) -> [f64; 3] {
    let r = [b[0].max(0.0), b[1].max(0.0), b[2].max(0.0)];
    let s = r[0] + r[1] + r[2];
    [r[0] / s, r[1] / s, r[2] / s]
}

/// Doubled signed area of a projected triangle; negative means front-facing.
#[inline]
pub fn signed_area2(v: [Vector2<f64>; 3]) -> f64 {
    cross(v[1] - v[0], v[2] - v[0])
}

/// Side length in pixels of the binning tiles.
const TILE: usize = 8;

/// Per-triangle quantities shared by all of its pixels.
struct TriSetup {
    v: [Vector2<f64>; 3],
    area2: f64,
    front: bool,
    closeness: [f64; 3],
    edges: [Vector2<f64>; 3],
    /// Orientation over edge length, so `cross(edge, p - v) * inv_len` is the
    /// inward distance to the edge line.
    inv_len: [f64; 3],
    /// Inclusive pixel bounds of the reach-expanded bounding box.
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

fn tri_setup(
    tri: &[u32; 3],
    proj: &Projection,
    behind: &[bool],
    reach: f64,
    width: usize,
    height: usize,
    closeness_of: &impl Fn(f64) -> f64,
) -> Option<TriSetup> {
    let idx = tri.map(|k| k as usize);
    if idx.iter().any(|&k| behind[k]) {
        return None;
    }
    let v = idx.map(|k| proj.points[k]);
    let area2 = signed_area2(v);
    if !(area2.abs() > 1e-12) {
        return None;
    }
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - reach;
    let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + reach;
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - reach;
    let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + reach;
    if max_x < 0.0 || max_y < 0.0 || min_x > width as f64 || min_y > height as f64 {
        return None;
    }
    let j0 = (min_x - 0.5).ceil().max(0.0);
    let j1 = (max_x - 0.5).floor().min(width as f64 - 1.0);
    let i0 = (min_y - 0.5).ceil().max(0.0);
    let i1 = (max_y - 0.5).floor().min(height as f64 - 1.0);
    if j1 < j0 || i1 < i0 {
        return None;
    }
    let orient = area2.signum();
    let edges: [Vector2<f64>; 3] = std::array::from_fn(|e| v[(e + 1) % 3] - v[e]);
    Some(TriSetup {
        v,
        area2,
        front: area2 < 0.0,
        closeness: idx.map(|k| closeness_of(proj.depth[k])),
        inv_len: edges.map(|e| orient / e.norm()),
        edges,
        i0: i0 as usize,
        i1: i1 as usize,
        j0: j0 as usize,
        j1: j1 as usize,
    })
}

/// Builds the fragment lists of a projected mesh.
pub fn rasterize_fragments(
    proj: &Projection,
    triangles: &[[u32; 3]],
    cam: &CameraSpec,
    settings: &RasterSettings,
) -> Result<Fragments> {
    settings.validate()?;
    cam.validate()?;
    let (width, height) = (cam.width, cam.height);
    let npix = width * height;
    let sigma = settings.sigma;
    let reach = (-MIN_LOGIT * sigma).sqrt();
    let range = cam.far - cam.near;
    let closeness_of = |z: f64| (cam.far - z) / range;

    let mut behind = vec![false; proj.points.len()];
    for &b in &proj.behind {
        behind[b as usize] = true;
    }

    // Triangles are binned in order into square tiles; each pixel then walks
    // its tile's list, so fragments come out grouped by pixel and ordered by
    // triangle without a sort.
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    let mut setups: Vec<Option<TriSetup>> = Vec::with_capacity(triangles.len());
    for (ti, tri) in triangles.iter().enumerate() {
        let setup = tri_setup(tri, proj, &behind, reach, width, height, &closeness_of);
        if let Some(t) = &setup {
            for ty in t.i0 / TILE..=t.i1 / TILE {
                for tx in t.j0 / TILE..=t.j1 / TILE {
                    bins[ty * tiles_x + tx].push(ti as u32);
                }
            }
        }
        setups.push(setup);
    }

    let mut offsets = Vec::with_capacity(npix + 1);
    offsets.push(0);
    let bound: usize = setups.iter().flatten().map(|t| (t.i1 - t.i0 + 1) * (t.j1 - t.j0 + 1)).sum();
    let mut fragments: Vec<Fragment> = Vec::with_capacity(bound);
    for i in 0..height {
        for j in 0..width {
            let p = Vector2::new(j as f64 + 0.5, i as f64 + 0.5);
            for &ti in &bins[(i / TILE) * tiles_x + j / TILE] {
                let Some(t) = &setups[ti as usize] else { continue };
                if i < t.i0 || i > t.i1 || j < t.j0 || j > t.j1 {
                    continue;
                }
                let v = t.v;
                if (0..3).any(|e| cross(t.edges[e], p - v[e]) * t.inv_len[e] < -reach) {
                    continue;
                }
                let b = raw_barycentrics(p, v, t.area2);
                let inside = b[0] >= 0.0 && b[1] >= 0.0 && b[2] >= 0.0;
                let mut best = (f64::INFINITY, 0.0, 0u8);
                for e in 0..3 {
                    let (d2, s) = segment_distance(p, v[e], v[(e + 1) % 3]);
                    if d2 < best.0 {
                        best = (d2, s, e as u8);
                    }
                }
                let logit = if inside { best.0 / sigma } else { -best.0 / sigma };
                if logit < MIN_LOGIT {
                    continue;
                }
                let bary = clamp_barycentrics(b);
                let zc = t.closeness;
                fragments.push(Fragment {
                    tri: ti,
                    front: t.front,
                    inside,
                    edge: best.2,
                    t: best.1,
                    coverage: sigmoid(logit),
                    closeness: bary[0] * zc[0] + bary[1] * zc[1] + bary[2] * zc[2],
                    bary,
                    exp_over_sum: 0.0,
                    weight: 0.0,
                });
            }
            offsets.push(fragments.len());
        }
    }

    let gamma = settings.gamma;
    let eps = settings.background_eps;
    let mut background_weight = vec![1.0; npix];
    let mut silhouette = vec![0.0; npix];
    let mut face_id = vec![None; npix];
    let mut barycentrics = vec![[0.0; 3]; npix];
    let mut depth = vec![cam.far; npix];
    for p in 0..npix {
        let frs = &mut fragments[offsets[p]..offsets[p + 1]];
        let mut m = eps;
        let mut uncovered = 1.0;
        let mut nearest: Option<(f64, usize)> = None;
        for (k, f) in frs.iter().enumerate() {
            uncovered *= 1.0 - f.coverage;
            if f.front {
                m = m.max(f.closeness);
                if f.inside && nearest.is_none_or(|(c, _)| f.closeness > c) {
                    nearest = Some((f.closeness, k));
                }
            }
        }
        silhouette[p] = 1.0 - uncovered;
        let mut sum = ((eps - m) / gamma).exp();
        let bg = sum;
        for f in frs.iter_mut() {
            if f.front {
                f.exp_over_sum = ((f.closeness - m) / gamma).exp();
                sum += f.coverage * f.exp_over_sum;
            }
        }
        for f in frs.iter_mut() {
            f.exp_over_sum /= sum;
            f.weight = f.coverage * f.exp_over_sum;
        }
        background_weight[p] = bg / sum;
        if let Some((c, k)) = nearest {
            face_id[p] = Some(frs[k].tri);
            barycentrics[p] = frs[k].bary;
            depth[p] = cam.far - c * range;
        }
    }

    Ok(Fragments {
        width,
        height,
        offsets,
        fragments,
        background_weight,
        silhouette,
        face_id,
        barycentrics,
        depth,
        settings: *settings,
        near: cam.near,
        far: cam.far,
    })
}

/// Blends per-vertex colors (flat `3 * Nv`) over cached fragments.
pub fn shade_fragments(frags: &Fragments, triangles: &[[u32; 3]], colors: &[f64]) -> Image {
    let npix = frags.width * frags.height;
    let bgc = frags.settings.background;
    let mut data = vec![0.0; 3 * npix];
    for p in 0..npix {
        let mut acc = [0.0; 3];
        for f in &frags.fragments[frags.offsets[p]..frags.offsets[p + 1]] {
            if f.weight == 0.0 {
                continue;
            }
            let tri = triangles[f.tri as usize];
            for c in 0..3 {
                let col = f.bary[0] * colors[3 * tri[0] as usize + c]
                    + f.bary[1] * colors[3 * tri[1] as usize + c]
                    + f.bary[2] * colors[3 * tri[2] as usize + c];
                acc[c] += f.weight * col;
            }
        }
        let bw = frags.background_weight[p];
        for c in 0..3 {
            data[3 * p + c] = acc[c] + bw * bgc[c];
        }
    }
    Image::from_vec(frags.width, frags.height, 3, data)
}

impl Fragments {
    pub fn silhouette_image(&self) -> Image {
        Image::from_vec(self.width, self.height, 1, self.silhouette.clone())
    }

    pub fn depth_image(&self) -> Image {
        Image::from_vec(self.width, self.height, 1, self.depth.clone())
    }

    pub fn output(&self, color: Image) -> RasterOutput {
        RasterOutput {
            color,
            silhouette: self.silhouette_image(),
            face_id: self.face_id.clone(),
            barycentrics: self.barycentrics.clone(),
            depth: self.depth_image(),
        }
    }
}

/// Rasterizes and shades in one call.
pub fn rasterize(
    proj: &Projection,
    triangles: &[[u32; 3]],
    colors: &[f64],
    cam: &CameraSpec,
    settings: &RasterSettings,
) -> Result<RasterOutput> {
    let frags = rasterize_fragments(proj, triangles, cam, settings)?;
    let color = shade_fragments(&frags, triangles, colors);
    Ok(frags.output(color))
}

/// Back-propagates a color-image gradient to vertex colors (accumulated into
/// `grad_colors`) and, when supplied, to the fragments' soft quantities.
pub fn shade_fragments_vjp(
    frags: &Fragments,
    triangles: &[[u32; 3]],
    colors: &[f64],
    grad_color: &Image,
    grad_colors: Option<&mut [f64]>,
    mut grad_frags: Option<&mut FragmentGrad>,
) {
    let npix = frags.width * frags.height;
    let bgc = frags.settings.background;
    let inv_gamma = 1.0 / frags.settings.gamma;
    let mut grad_colors = grad_colors;
    for p in 0..npix {
        let g = [grad_color.data[3 * p], grad_color.data[3 * p + 1], grad_color.data[3 * p + 2]];
        if g == [0.0; 3] {
            continue;
        }
        let range = frags.offsets[p]..frags.offsets[p + 1];
        let mut mean = frags.background_weight[p] * (g[0] * bgc[0] + g[1] * bgc[1] + g[2] * bgc[2]);
        for f in &frags.fragments[range.clone()] {
            if f.weight == 0.0 {
                continue;
            }
            let tri = triangles[f.tri as usize];
            let mut gi = 0.0;
            for (k, &v) in tri.iter().enumerate() {
                let v = v as usize;
                gi += f.bary[k] * (g[0] * colors[3 * v] + g[1] * colors[3 * v + 1] + g[2] * colors[3 * v + 2]);
            }
            mean += f.weight * gi;
        }
        for (idx, f) in frags.fragments[range.clone()].iter().enumerate() {
            if !f.front {
                continue;
            }
            let fi = range.start + idx;
            let tri = triangles[f.tri as usize];
            let mut gi = 0.0;
            let mut gb = [0.0; 3];
            for (k, &v) in tri.iter().enumerate() {
                let v = v as usize;
                gb[k] = g[0] * colors[3 * v] + g[1] * colors[3 * v + 1] + g[2] * colors[3 * v + 2];
                gi += f.bary[k] * gb[k];
            }
            if let Some(gf) = grad_frags.as_deref_mut() {
                gf.coverage[fi] += f.exp_over_sum * (gi - mean);
                gf.closeness[fi] += f.weight * (gi - mean) * inv_gamma;
                for k in 0..3 {
                    gf.bary[fi][k] += f.weight * gb[k];
                }
            }
            if let Some(gc) = grad_colors.as_deref_mut() {
                for (k, &v) in tri.iter().enumerate() {
                    let s = f.weight * f.bary[k];
                    for c in 0..3 {
                        gc[3 * v as usize + c] += s * g[c];
                    }
                }
            }
        }
    }
}

/// Adds the silhouette gradient `dL/dS` to the fragments' coverage gradients.
pub fn silhouette_vjp(frags: &Fragments, grad_silhouette: &[f64], grad_frags: &mut FragmentGrad) {
    let npix = frags.width * frags.height;
    let mut prefix = Vec::new();
    for p in 0..npix {
        let gs = grad_silhouette[p];
        if gs == 0.0 {
            continue;
        }
        let frs = &frags.fragments[frags.offsets[p]..frags.offsets[p + 1]];
        prefix.clear();
        let mut acc = 1.0;
        for f in frs {
            prefix.push(acc);
            acc *= 1.0 - f.coverage;
        }
        let mut suffix = 1.0;
        for k in (0..frs.len()).rev() {
            grad_frags.coverage[frags.offsets[p] + k] += gs * prefix[k] * suffix;
            suffix *= 1.0 - frs[k].coverage;
        }
    }
}

/// Back-propagates fragment gradients to projected points and vertex depths.
pub fn fragments_vjp(
    frags: &Fragments,
    proj: &Projection,
    triangles: &[[u32; 3]],
    grad_frags: &FragmentGrad,
    grad_points: &mut [Vector2<f64>],
    grad_depth: &mut [f64],
) {
    let sigma = frags.settings.sigma;
    let range = frags.far - frags.near;
    for p in 0..frags.width * frags.height {
        let px = Vector2::new((p % frags.width) as f64 + 0.5, (p / frags.width) as f64 + 0.5);
        for fi in frags.offsets[p]..frags.offsets[p + 1] {
            let f = &frags.fragments[fi];
            let g_cov = grad_frags.coverage[fi];
            let g_close = grad_frags.closeness[fi];
            let mut g_bary = grad_frags.bary[fi];
            if g_cov == 0.0 && g_close == 0.0 && g_bary == [0.0; 3] {
                continue;
            }
            let tri = triangles[f.tri as usize];
            let idx = tri.map(|k| k as usize);
            let v = idx.map(|k| proj.points[k]);

            if g_cov != 0.0 {
                // d cov / d d^2 = s cov (1 - cov) / sigma; the closest point
                // moves with the edge endpoints (envelope theorem).
                let s = if f.inside { 1.0 } else { -1.0 };
                let g_d2 = g_cov * s * f.coverage * (1.0 - f.coverage) / sigma;
                let e0 = f.edge as usize;
                let e1 = (e0 + 1) % 3;
                let q = v[e0] + (v[e1] - v[e0]) * f.t;
                let dq = (q - px) * (2.0 * g_d2);
                grad_points[idx[e0]] += dq * (1.0 - f.t);
                grad_points[idx[e1]] += dq * f.t;
            }

            if g_close != 0.0 {
                for k in 0..3 {
                    let zc = (frags.far - proj.depth[idx[k]]) / range;
                    g_bary[k] += g_close * zc;
                    grad_depth[idx[k]] -= g_close * f.bary[k] / range;
                }
            }

            if g_bary == [0.0; 3] {
                continue;
            }
            // Through the renormalization of the clamped barycentrics.
            let area2 = signed_area2(v);
            let raw = raw_barycentrics(px, v, area2);
            let pos_sum: f64 = raw.iter().map(|b| b.max(0.0)).sum();
            let dot = f.bary[0] * g_bary[0] + f.bary[1] * g_bary[1] + f.bary[2] * g_bary[2];
            let mut g_raw = [0.0; 3];
            for k in 0..3 {
                if raw[k] > 0.0 {
                    g_raw[k] = (g_bary[k] - dot) / pos_sum;
                }
            }
            // b_k = E_k / A with E_k = (v_i - p) x (v_j - p), (i, j) cyclic after k.
            let perp_a = |b: Vector2<f64>| Vector2::new(b.y, -b.x); // d(a x b)/da
            let perp_b = |a: Vector2<f64>| Vector2::new(-a.y, a.x); // d(a x b)/db
            let mut g_area = 0.0;
            for k in 0..3 {
                if g_raw[k] == 0.0 {
                    continue;
                }
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let scale = g_raw[k] / area2;
                grad_points[idx[i]] += perp_a(v[j] - px) * scale;
                grad_points[idx[j]] += perp_b(v[i] - px) * scale;
                g_area -= g_raw[k] * raw[k] / area2;
            }
            if g_area != 0.0 {
                let d1 = perp_a(v[2] - v[0]) * g_area;
                let d2 = perp_b(v[1] - v[0]) * g_area;
                grad_points[idx[1]] += d1;
                grad_points[idx[2]] += d2;
                grad_points[idx[0]] -= d1 + d2;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_projection(points: &[(f64, f64)], depth: &[f64]) -> Projection {
        Projection {
            points: points.iter().map(|&(x, y)| Vector2::new(x, y)).collect(),
            depth: depth.to_vec(),
            behind: Vec::new(),
        }
    }

    fn small_camera(size: usize) -> CameraSpec {
        CameraSpec::for_size(size)
    }

    #[test]
    fn big_triangle_covers_interior_with_its_color() {
        let cam = small_camera(32);
        // Clockwise on screen (y down) gives a negative doubled area: front-facing.
        let proj = flat_projection(&[(-20.0, -20.0), (-20.0, 80.0), (80.0, -20.0)], &[10.0; 3]);
        assert!(signed_area2([proj.points[0], proj.points[1], proj.points[2]]) < 0.0);
        let mut settings = RasterSettings::for_camera(&cam);
        settings.sigma = 1e-3;
        let colors = [0.2, 0.5, 0.7].repeat(3);
        let out = rasterize(&proj, &[[0, 1, 2]], &colors, &cam, &settings).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                if (i + j) as f64 + 1.0 < 58.0 {
                    let p = i * 32 + j;
                    assert!(out.silhouette.data[p] >= 0.999);
                    for c in 0..3 {
                        assert!((out.color.data[3 * p + c] - colors[c]).abs() < 1e-3);
                    }
                    assert_eq!(out.face_id[p], Some(0));
                }
            }
        }
    }

    #[test]
    fn empty_mesh_renders_background() {
        let cam = small_camera(8);
        let proj = flat_projection(&[], &[]);
        let out = rasterize(&proj, &[], &[], &cam, &RasterSettings::for_camera(&cam)).unwrap();
        assert!(out.color.data.iter().all(|&c| c == 0.0));
        assert!(out.silhouette.data.iter().all(|&s| s == 0.0));
        assert!(out.face_id.iter().all(Option::is_none));
    }

    #[test]
    fn nearer_triangle_dominates_the_blend() {
        let cam = small_camera(16);
        let pts = [(-10.0, -10.0), (-10.0, 40.0), (40.0, -10.0)];
        let mut all = pts.to_vec();
        all.extend_from_slice(&pts);
        let proj = flat_projection(&all, &[12.0, 12.0, 12.0, 10.0, 10.0, 10.0]);
        let tris = [[0, 1, 2], [3, 4, 5]];
        let mut colors = [1.0, 0.0, 0.0].repeat(3);
        colors.extend([0.0, 0.0, 1.0].repeat(3));
        let settings = RasterSettings::for_camera(&cam);
        let out = rasterize(&proj, &tris, &colors, &cam, &settings).unwrap();
        let p = 3 * 16 + 3;
        // Hand computation of the two-term blend with both coverages ~1.
        let zn = |z: f64| (cam.far - z) / (cam.far - cam.near);
        let ratio = ((zn(12.0) - zn(10.0)) / settings.gamma).exp();
        let expected_blue = 1.0 / (1.0 + ratio);
        assert!((out.color.data[3 * p + 2] - expected_blue).abs() < 1e-9);
        assert!(out.color.data[3 * p + 2] > 0.999);
        assert_eq!(out.face_id[p], Some(1));
        assert!((out.depth.data[p] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn back_faces_only_feed_the_silhouette() {
        let cam = small_camera(16);
        let proj = flat_projection(&[(-10.0, -10.0), (40.0, -10.0), (-10.0, 40.0)], &[10.0; 3]);
        let colors = [1.0; 9];
        let out = rasterize(&proj, &[[0, 1, 2]], &colors, &cam, &RasterSettings::for_camera(&cam)).unwrap();
        let p = 2 * 16 + 2;
        assert!(out.silhouette.data[p] > 0.999);
        assert_eq!(out.color.data[3 * p], 0.0);
        assert_eq!(out.face_id[p], None);
    }

    #[test]
    fn adding_a_triangle_never_shrinks_the_silhouette() {
        let cam = small_camera(16);
        let proj = flat_projection(
            &[(2.0, 2.0), (2.0, 12.0), (12.0, 2.0), (6.0, 6.0), (6.0, 15.0), (15.0, 9.0)],
            &[10.0, 10.0, 10.0, 11.0, 11.0, 11.0],
        );
        let s = RasterSettings::for_camera(&cam);
        let one = rasterize_fragments(&proj, &[[0, 1, 2]], &cam, &s).unwrap();
        let two = rasterize_fragments(&proj, &[[0, 1, 2], [3, 5, 4]], &cam, &s).unwrap();
        for p in 0..256 {
            assert!(two.silhouette[p] >= one.silhouette[p]);
            assert!((0.0..=1.0).contains(&two.silhouette[p]));
        }
    }

    fn fan_scene() -> (Projection, Vec<[u32; 3]>, Vec<f64>) {
        let proj = flat_projection(
            &[(8.1, 7.7), (2.3, 3.1), (3.2, 13.4), (13.9, 12.2), (12.6, 2.4), (7.0, 1.2)],
            &[10.0, 10.4, 10.2, 10.5, 10.1, 10.3],
        );
        let tris = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1]];
        let colors: Vec<f64> = (0..18).map(|i| 0.1 + 0.05 * i as f64).collect();
        (proj, tris, colors)
    }

    #[test]
    fn silhouette_mass_gradient_matches_finite_differences() {
        let cam = small_camera(16);
        let settings = RasterSettings::for_camera(&cam);
        let (proj, tris, _) = fan_scene();
        let mass = |pr: &Projection| {
            rasterize_fragments(pr, &tris, &cam, &settings).unwrap().silhouette.iter().sum::<f64>()
        };
        let frags = rasterize_fragments(&proj, &tris, &cam, &settings).unwrap();
        let mut gf = FragmentGrad::zeros(&frags);
        silhouette_vjp(&frags, &vec![1.0; 256], &mut gf);
        let mut gp = vec![Vector2::zeros(); 6];
        let mut gd = vec![0.0; 6];
        fragments_vjp(&frags, &proj, &tris, &gf, &mut gp, &mut gd);
        let h = 1e-6;
        for v in 0..6 {
            for k in 0..2 {
                let mut a = proj.clone();
                let mut b = proj.clone();
                a.points[v][k] += h;
                b.points[v][k] -= h;
                let fd = (mass(&a) - mass(&b)) / (2.0 * h);
                let rel = (fd - gp[v][k]).abs() / fd.abs().max(1e-3);
                assert!(rel < 1e-3, "vertex {v} axis {k}: fd {fd} analytic {}", gp[v][k]);
            }
        }
    }

    #[test]
    fn color_gradient_matches_finite_differences() {
        let cam = small_camera(16);
        let mut settings = RasterSettings::for_camera(&cam);
        settings.gamma = 1e-2;
        let (proj, tris, colors) = fan_scene();
        let weights = Image::from_fn(16, 16, 3, |x, y, c| ((x * 7 + y * 3 + c * 5) % 11) as f64 / 11.0 - 0.4);
        let loss = |pr: &Projection, col: &[f64]| {
            let out = rasterize(pr, &tris, col, &cam, &settings).unwrap();
            let sil: f64 = out.silhouette.data.iter().sum();
            out.color.data.iter().zip(&weights.data).map(|(a, b)| a * b).sum::<f64>() + 0.3 * sil
        };
        let frags = rasterize_fragments(&proj, &tris, &cam, &settings).unwrap();
        let mut gf = FragmentGrad::zeros(&frags);
        let mut gc = vec![0.0; colors.len()];
        shade_fragments_vjp(&frags, &tris, &colors, &weights, Some(&mut gc), Some(&mut gf));
        silhouette_vjp(&frags, &vec![0.3; 256], &mut gf);
        let mut gp = vec![Vector2::zeros(); 6];
        let mut gd = vec![0.0; 6];
        fragments_vjp(&frags, &proj, &tris, &gf, &mut gp, &mut gd);
        let h = 1e-6;
        for i in 0..colors.len() {
            let mut a = colors.clone();
            let mut b = colors.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (loss(&proj, &a) - loss(&proj, &b)) / (2.0 * h);
            assert!((fd - gc[i]).abs() <= 1e-6 * fd.abs().max(1.0), "color {i}");
        }
        for v in 0..6 {
            for k in 0..2 {
                let mut a = proj.clone();
                let mut b = proj.clone();
                a.points[v][k] += h;
                b.points[v][k] -= h;
                let fd = (loss(&a, &colors) - loss(&b, &colors)) / (2.0 * h);
                let rel = (fd - gp[v][k]).abs() / fd.abs().max(1e-2);
                assert!(rel < 1e-3, "vertex {v} axis {k}: fd {fd} analytic {}", gp[v][k]);
            }
            let mut a = proj.clone();
            let mut b = proj.clone();
            a.depth[v] += h;
            b.depth[v] -= h;
            let fd = (loss(&a, &colors) - loss(&b, &colors)) / (2.0 * h);
            let rel = (fd - gd[v]).abs() / fd.abs().max(1e-2);
            assert!(rel < 1e-3, "depth {v}: fd {fd} analytic {}", gd[v]);
        }
    }
}
