//! Detail normals and detail vertices from a UV displacement map.
//!
//! Detail normals are transported to vertices as a correction of the coarse
//! vertex normals: `N' = normalize(n + |n| * delta)` where `n` is the raw
//! coarse vertex normal and `delta = S(N'^uv) - S(N^uv)` the change of the
//! sampled UV normals. With zero displacement `delta` vanishes and `N' = N`
//! bit for bit.

use nalgebra::Vector3;

use crate::error::Result;
use crate::model::normals::{normalize_vjp, raw_normals_vjp};
use crate::model::VertexNormals;
use crate::uv::atlas::{to_vectors, UvAtlas};
use crate::uv::map::{UvMap, UvSemantic};
use crate::uv::ops::{apply_displacement, apply_displacement_vjp, uv_normals, UvNormals};

/// Coarse position and normal maps `V^uv`, `N^uv` of a posed mesh.
#[derive(Clone, Debug)]
pub struct UvBase {
    pub positions: UvMap,
    pub normals: UvNormals,
}

impl UvBase {
    pub fn new(atlas: &UvAtlas, vertices: &[Vector3<f64>]) -> Result<UvBase> {
        let positions = atlas.vectors_to_uv(vertices, UvSemantic::Position)?;
        let normals = uv_normals(&positions, atlas.orientation)?;
        Ok(UvBase { positions, normals })
    }
}

/// Forward state of the detail pipeline.
#[derive(Clone, Debug)]
pub struct DetailGeometry {
    /// `V'^uv = V^uv + beta_d * D * N^uv`.
    pub displaced: UvMap,
    pub displaced_normals: UvNormals,
    pub delta: Vec<Vector3<f64>>,
    pub mixed: Vec<Vector3<f64>>,
    /// Per-vertex detail normals `N'`.
    pub normals: Vec<Vector3<f64>>,
}

/// Gradients of the detail normals with respect to their inputs.
#[derive(Clone, Debug)]
pub struct DetailGrad {
    pub disp: Vec<f64>,
    pub beta_d: f64,
    /// `dL/dV` through `V^uv` and the coarse raw normals; only when requested.
    pub vertices: Option<Vec<Vector3<f64>>>,
}

pub fn detail_geometry(
    atlas: &UvAtlas,
    base: &UvBase,
    coarse: &VertexNormals,
    disp: &[f64],
    beta_d: f64,
) -> Result<DetailGeometry> {
    let displaced = apply_displacement(&base.positions, disp, &base.normals.map, beta_d)?;
    let displaced_normals = uv_normals(&displaced, atlas.orientation)?;
    let after = to_vectors(&atlas.uv_to_vertices(&displaced_normals.map)?);
    let before = to_vectors(&atlas.uv_to_vertices(&base.normals.map)?);
    let delta: Vec<Vector3<f64>> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
    let mixed: Vec<Vector3<f64>> = coarse.raw.iter().zip(&delta).map(|(n, d)| n + d * n.norm()).collect();
    let normals = mixed
        .iter()
        .zip(&coarse.unit)
        .map(|(m, u)| {
            let len = m.norm();
            if len > 0.0 {
                m / len
            } else {
                *u
            }
        })
        .collect();
    Ok(DetailGeometry {
        displaced,
        displaced_normals,
        delta,
        mixed,
        normals,
    })
}

impl DetailGeometry {
    /// Detail mesh vertices `V + S(V'^uv - V^uv)`.
    pub fn vertices(&self, atlas: &UvAtlas, base: &UvBase, vertices: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        let mut offset = self.displaced.clone();
        for (o, b) in offset.values.data.iter_mut().zip(&base.positions.values.data) {
            *o -= b;
        }
        let shift = to_vectors(&atlas.uv_to_vertices(&offset)?);
        Ok(vertices.iter().zip(&shift).map(|(v, s)| v + s).collect())
    }

    /// Back-propagates `dL/dN'`. Vertex gradients are produced only when the
    /// coarse mesh is supplied (the coarse geometry is not frozen).
    #[allow(clippy::too_many_arguments)]
    pub fn vjp(
        &self,
        atlas: &UvAtlas,
        base: &UvBase,
        coarse: &VertexNormals,
        disp: &[f64],
        beta_d: f64,
        grad_normals: &[Vector3<f64>],
        mesh: Option<(&[Vector3<f64>], &[[u32; 3]])>,
    ) -> DetailGrad {
        let nv = grad_normals.len();
        let texels = atlas.texel_count();
        let mut g_delta = vec![0.0; 3 * nv];
        let mut g_raw = vec![Vector3::zeros(); nv];
        for v in 0..nv {
            let m = &self.mixed[v];
            if m.norm() == 0.0 {
                continue;
            }
            let gm = normalize_vjp(m, &self.normals[v], &grad_normals[v]);
            let n = &coarse.raw[v];
            let len = n.norm();
            let gd = gm * len;
            g_delta[3 * v..3 * v + 3].copy_from_slice(gd.as_slice());
            if len > 0.0 {
                g_raw[v] = gm + (n / len) * self.delta[v].dot(&gm);
            }
        }
        let mut g_after = vec![0.0; 3 * texels];
        atlas.uv_to_vertices_vjp(&g_delta, 3, &mut g_after);
        let mut g_displaced = vec![0.0; 3 * texels];
        self.displaced_normals.vjp(&self.displaced, &g_after, &mut g_displaced);
        let dg = apply_displacement_vjp(&base.positions, disp, &base.normals.map, beta_d, &g_displaced);
        let grad_vertices = mesh.map(|(verts, triangles)| {
            // delta also subtracts the sampled coarse normals.
            let mut g_normals_uv = dg.normals.clone();
            for (g, a) in g_normals_uv.iter_mut().zip(&g_after) {
                *g -= a;
            }
            let mut g_positions = dg.positions.clone();
            base.normals.vjp(&base.positions, &g_normals_uv, &mut g_positions);
            let mut flat = vec![0.0; 3 * nv];
            atlas.attribute_to_uv_vjp(&g_positions, 3, &mut flat);
            let mut out = to_vectors(&flat);
            raw_normals_vjp(verts, triangles, &g_raw, &mut out);
            out
        });
        DetailGrad {
            disp: dg.disp,
            beta_d: dg.beta_d,
            vertices: grad_vertices,
        }
    }
}
