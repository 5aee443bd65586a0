use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::model::FaceBasis;
use crate::uv::map::{UvMap, UvSemantic};

/// The triangle covering a texel and the texel center's barycentrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TexelRef {
    pub tri: u32,
    pub verts: [u32; 3],
    pub bary: [f64; 3],
}

/// Texels and weights a vertex samples from.
#[derive(Clone, Debug, PartialEq)]
struct VertexTaps {
    taps: [(u32, f64); 4],
    len: u8,
}

/// Precomputed transport between mesh vertices and a UV grid.
///
/// Both directions are fixed sparse linear maps, so their adjoints are exact
/// transposes and can be applied to gradients directly.
#[derive(Clone, Debug)]
pub struct UvAtlas {
    pub size: usize,
    pub texels: Vec<Option<TexelRef>>,
    /// `+1` if UV winding agrees with the outward 3D winding of most
    /// triangles, `-1` otherwise.
    pub orientation: f64,
    /// Texels claimed by more than one triangle interior (later wins).
    pub overlaps: usize,
    /// Triangles whose UV winding disagrees with the majority; not rasterized.
    pub folded: Vec<u32>,
    /// Vertices whose bilinear neighborhood is not fully covered and that
    /// sample the nearest covered texel instead.
    pub fallback_vertices: Vec<u32>,
    vertex_taps: Vec<VertexTaps>,
    vertex_count: usize,
}

#[inline]
fn uv_area2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

impl UvAtlas {
    pub fn new(basis: &FaceBasis, size: usize) -> Result<UvAtlas> {
        if basis.uv_coords.len() != basis.vertex_count() {
            return Err(Error::MissingUv);
        }
        if size < 2 {
            return Err(Error::InvalidArgument(format!("uv grid size {size} is too small")));
        }
        let uv = &basis.uv_coords;
        let areas: Vec<f64> = basis
            .triangles
            .iter()
            .map(|t| uv_area2(uv[t[0] as usize], uv[t[1] as usize], uv[t[2] as usize]))
            .collect();
        let positive = areas.iter().filter(|&&a| a > 0.0).count();
        let negative = areas.iter().filter(|&&a| a < 0.0).count();
        let orientation = if positive >= negative { 1.0 } else { -1.0 };

        let s = size as f64;
        let mut texels: Vec<Option<TexelRef>> = vec![None; size * size];
        let mut interior = vec![false; size * size];
        let mut overlaps = 0;
        let mut folded = Vec::new();
        for (ti, tri) in basis.triangles.iter().enumerate() {
            let area = areas[ti];
            if area * orientation <= 0.0 {
                folded.push(ti as u32);
                continue;
            }
            let p = tri.map(|k| {
                let [u, v] = uv[k as usize];
                [u * s, v * s]
            });
            let area = area * s * s;
            let lo_x = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
            let hi_x = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
            let lo_y = p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
            let hi_y = p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max);
            let c0 = (lo_x - 0.5).ceil().max(0.0) as usize;
            let c1 = (hi_x - 0.5).floor().min(s - 1.0);
            let r0 = (lo_y - 0.5).ceil().max(0.0) as usize;
            let r1 = (hi_y - 0.5).floor().min(s - 1.0);
            if c1 < 0.0 || r1 < 0.0 {
                continue;
            }
            for r in r0..=r1 as usize {
                for c in c0..=c1 as usize {
                    let q = [c as f64 + 0.5, r as f64 + 0.5];
                    let b = [
                        uv_area2(q, p[1], p[2]) / area,
                        uv_area2(p[0], q, p[2]) / area,
                        uv_area2(p[0], p[1], q) / area,
                    ];
                    if b.iter().any(|&x| x < 0.0) {
                        continue;
                    }
                    let t = r * size + c;
                    let strict = b.iter().all(|&x| x > 1e-9);
                    if texels[t].is_some() && strict && interior[t] {
                        overlaps += 1;
                    }
                    interior[t] = strict;
                    texels[t] = Some(TexelRef {
                        tri: ti as u32,
                        verts: *tri,
                        bary: b,
                    });
                }
            }
        }

        let mut atlas = UvAtlas {
            size,
            texels,
            orientation,
            overlaps,
            folded,
            fallback_vertices: Vec::new(),
            vertex_taps: Vec::new(),
            vertex_count: basis.vertex_count(),
        };
        atlas.build_vertex_taps(uv);
        Ok(atlas)
    }

    fn covered(&self, t: usize) -> bool {
        self.texels[t].is_some()
    }

    fn build_vertex_taps(&mut self, uv: &[[f64; 2]]) {
        let size = self.size;
        let mut taps = Vec::with_capacity(uv.len());
        let mut fallback = Vec::new();
        for (v, &[u, w]) in uv.iter().enumerate() {
            let fx = (u * size as f64 - 0.5).clamp(0.0, (size - 1) as f64);
            let fy = (w * size as f64 - 0.5).clamp(0.0, (size - 1) as f64);
            let x0 = (fx.floor() as usize).min(size - 2);
            let y0 = (fy.floor() as usize).min(size - 2);
            let tx = fx - x0 as f64;
            let ty = fy - y0 as f64;
            let quad = [
                (y0 * size + x0, (1.0 - tx) * (1.0 - ty)),
                (y0 * size + x0 + 1, tx * (1.0 - ty)),
                ((y0 + 1) * size + x0, (1.0 - tx) * ty),
                ((y0 + 1) * size + x0 + 1, tx * ty),
            ];
            if quad.iter().all(|&(t, _)| self.covered(t)) {
                taps.push(VertexTaps {
                    taps: quad.map(|(t, w)| (t as u32, w)),
                    len: 4,
                });
                continue;
            }
            fallback.push(v as u32);
            let cx = fx.round() as usize;
            let cy = fy.round() as usize;
            match self.nearest_covered(cx, cy) {
                Some(t) => taps.push(VertexTaps {
                    taps: [(t as u32, 1.0), (0, 0.0), (0, 0.0), (0, 0.0)],
                    len: 1,
                }),
                None => taps.push(VertexTaps {
                    taps: [(0, 0.0); 4],
                    len: 0,
                }),
            }
        }
        self.vertex_taps = taps;
        self.fallback_vertices = fallback;
    }

    /// Nearest covered texel by Chebyshev rings, scanning each ring row-major.
    fn nearest_covered(&self, cx: usize, cy: usize) -> Option<usize> {
        let size = self.size as isize;
        let (cx, cy) = (cx as isize, cy as isize);
        for radius in 0..size {
            let mut best: Option<(isize, usize)> = None;
            for y in (cy - radius)..=(cy + radius) {
                for x in (cx - radius)..=(cx + radius) {
                    if x < 0 || y < 0 || x >= size || y >= size {
                        continue;
                    }
                    if (x - cx).abs().max((y - cy).abs()) != radius {
                        continue;
                    }
                    let t = (y * size + x) as usize;
                    let d = (x - cx).pow(2) + (y - cy).pow(2);
                    if self.covered(t) && best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, t));
                    }
                }
            }
            if let Some((_, t)) = best {
                return Some(t);
            }
        }
        None
    }

    pub fn texel_count(&self) -> usize {
        self.size * self.size
    }

    /// Number of covered texels.
    pub fn coverage(&self) -> usize {
        self.texels.iter().filter(|t| t.is_some()).count()
    }

    fn check_vertices(&self, len: usize, channels: usize) -> Result<()> {
        if len != self.vertex_count * channels {
            return Err(Error::dims("per-vertex attribute", self.vertex_count * channels, len));
        }
        Ok(())
    }

    /// Barycentric interpolation of a flat per-vertex attribute (`channels`
    /// values per vertex) onto the grid; validity is the coverage.
    pub fn attribute_to_uv(&self, attr: &[f64], channels: usize, semantic: UvSemantic) -> Result<UvMap> {
        self.check_vertices(attr.len(), channels)?;
        let mut map = UvMap::new(self.size, channels, semantic);
        for (t, texel) in self.texels.iter().enumerate() {
            if let Some(r) = texel {
                map.validity[t] = 1.0;
                let out = map.texel_mut(t);
                for k in 0..3 {
                    let v = r.verts[k] as usize;
                    for c in 0..channels {
                        out[c] += r.bary[k] * attr[v * channels + c];
                    }
                }
            }
        }
        Ok(map)
    }

    /// [`UvAtlas::attribute_to_uv`] for 3-vectors.
    pub fn vectors_to_uv(&self, attr: &[Vector3<f64>], semantic: UvSemantic) -> Result<UvMap> {
        let flat: Vec<f64> = attr.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
        self.attribute_to_uv(&flat, 3, semantic)
    }

    /// Adjoint of [`UvAtlas::attribute_to_uv`]: accumulates texel gradients
    /// (`channels` per texel) into per-vertex gradients.
    pub fn attribute_to_uv_vjp(&self, grad_map: &[f64], channels: usize, grad_attr: &mut [f64]) {
        for (t, texel) in self.texels.iter().enumerate() {
            if let Some(r) = texel {
                let g = &grad_map[t * channels..(t + 1) * channels];
                if g.iter().all(|&x| x == 0.0) {
                    continue;
                }
                for k in 0..3 {
                    let v = r.verts[k] as usize;
                    for c in 0..channels {
                        grad_attr[v * channels + c] += r.bary[k] * g[c];
                    }
                }
            }
        }
    }

    /// Bilinear sample of a map at every vertex's UV coordinate, flat
    /// `channels` values per vertex. Vertices listed in
    /// [`UvAtlas::fallback_vertices`] take the nearest covered texel.
    pub fn uv_to_vertices(&self, map: &UvMap) -> Result<Vec<f64>> {
        if map.size() != self.size {
            return Err(Error::dims("uv map size", self.size, map.size()));
        }
        let channels = map.channels();
        let mut out = vec![0.0; self.vertex_count * channels];
        for (v, vt) in self.vertex_taps.iter().enumerate() {
            for &(t, w) in &vt.taps[..vt.len as usize] {
                let src = map.texel(t as usize);
                for c in 0..channels {
                    out[v * channels + c] += w * src[c];
                }
            }
        }
        Ok(out)
    }

    /// Adjoint of [`UvAtlas::uv_to_vertices`], accumulating into `grad_map`.
    pub fn uv_to_vertices_vjp(&self, grad_attr: &[f64], channels: usize, grad_map: &mut [f64]) {
        for (v, vt) in self.vertex_taps.iter().enumerate() {
            let g = &grad_attr[v * channels..(v + 1) * channels];
            for &(t, w) in &vt.taps[..vt.len as usize] {
                for c in 0..channels {
                    grad_map[t as usize * channels + c] += w * g[c];
                }
            }
        }
    }
}

pub(crate) fn to_vectors(flat: &[f64]) -> Vec<Vector3<f64>> {
    flat.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect()
}
