//! Wavefront OBJ/MTL text export and a reader for the subset it writes.
//!
//! Vertices are written in model coordinates with Rust's shortest
//! round-trip float formatting. Texture coordinates follow the OBJ
//! convention (`v` up), so `vt u (1 - v)` for a UV grid stored top row first.

use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Geometry read back from an OBJ file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Texture coordinates in the UV grid convention (`v` down).
    pub uvs: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    /// Texture-coordinate indices per triangle; empty when untextured.
    pub uv_triangles: Vec<[u32; 3]>,
    pub material_library: Option<String>,
}

/// OBJ text for a triangle mesh. With `uvs`, each vertex shares its index
/// with its texture coordinate; `material` names an MTL file and material.
pub fn encode_obj(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    uvs: Option<&[[f64; 2]]>,
    material: Option<(&str, &str)>,
) -> Result<String> {
    if let Some(uv) = uvs {
        if uv.len() != vertices.len() {
            return Err(Error::dims("uv coordinates", vertices.len(), uv.len()));
        }
    }
    let mut s = String::new();
    if let Some((lib, _)) = material {
        let _ = writeln!(s, "mtllib {lib}");
    }
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    if let Some(uv) = uvs {
        for t in uv {
            let _ = writeln!(s, "vt {} {}", t[0], 1.0 - t[1]);
        }
    }
    if let Some((_, name)) = material {
        let _ = writeln!(s, "usemtl {name}");
    }
    for tri in triangles {
        let [a, b, c] = tri.map(|i| i + 1);
        if uvs.is_some() {
            let _ = writeln!(s, "f {a}/{a} {b}/{b} {c}/{c}");
        } else {
            let _ = writeln!(s, "f {a} {b} {c}");
        }
    }
    Ok(s)
}

/// MTL text with one diffuse-textured material.
pub fn encode_mtl(name: &str, texture_file: &str) -> String {
    format!("newmtl {name}\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nillum 1\nmap_Kd {texture_file}\n")
}

fn parse_index(tok: &str, count: usize, line: usize) -> Result<u32> {
    let bad = || Error::InvalidArgument(format!("obj line {line}: bad index `{tok}`"));
    let i: i64 = tok.parse().map_err(|_| bad())?;
    let resolved = if i < 0 { count as i64 + i } else { i - 1 };
    if resolved < 0 || resolved as usize >= count {
        return Err(bad());
    }
    Ok(resolved as u32)
}

/// Parses `v`, `vt`, `f` (triangles only) and `mtllib` records.
pub fn decode_obj(text: &str) -> Result<ObjMesh> {
    let mut mesh = ObjMesh::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut toks = raw.split_whitespace();
        let Some(tag) = toks.next() else { continue };
        let nums = |toks: std::str::SplitWhitespace, k: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = toks
                .take(k)
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidArgument(format!("obj line {line}: bad number")))?;
            if v.len() < k {
                return Err(Error::InvalidArgument(format!("obj line {line}: expected {k} numbers")));
            }
            Ok(v)
        };
        match tag {
            "v" => {
                let v = nums(toks, 3)?;
                mesh.vertices.push(Vector3::new(v[0], v[1], v[2]));
            }
            "vt" => {
                let v = nums(toks, 2)?;
                mesh.uvs.push([v[0], 1.0 - v[1]]);
            }
            "f" => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(Error::InvalidArgument(format!("obj line {line}: only triangles are supported")));
                }
                let mut tri = [0u32; 3];
                let mut uv_tri = [0u32; 3];
                let mut textured = 0;
                for (k, c) in corners.iter().enumerate() {
                    let mut parts = c.split('/');
                    tri[k] = parse_index(parts.next().unwrap_or(""), mesh.vertices.len(), line)?;
                    if let Some(t) = parts.next().filter(|t| !t.is_empty()) {
                        uv_tri[k] = parse_index(t, mesh.uvs.len(), line)?;
                        textured += 1;
                    }
                }
                mesh.triangles.push(tri);
                match textured {
                    3 => mesh.uv_triangles.push(uv_tri),
                    0 => {}
                    _ => return Err(Error::InvalidArgument(format!("obj line {line}: mixed textured corners"))),
                }
            }
            "mtllib" => mesh.material_library = toks.next().map(str::to_string),
            _ => {}
        }
    }
    if !mesh.uv_triangles.is_empty() && mesh.uv_triangles.len() != mesh.triangles.len() {
        return Err(Error::InvalidArgument("obj mixes textured and untextured faces".into()));
    }
    Ok(mesh)
}
