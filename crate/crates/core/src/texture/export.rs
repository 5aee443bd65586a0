//! Textured mesh export and relighting of a fused texture.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{encode_mtl, encode_obj, encode_png, write_atomic};
use crate::model::Mesh;
use crate::render::{project, rasterize_fragments, shade, shade_fragments, CameraSpec, RasterSettings};
use crate::uv::{UvAtlas, UvMap};

/// An OBJ mesh, its material and the texture image it references.
#[derive(Clone, Debug, PartialEq)]
pub struct TexturedAsset {
    pub stem: String,
    pub obj: String,
    pub mtl: String,
    pub texture: Image,
}

impl TexturedAsset {
    pub fn obj_file(&self) -> String {
        format!("{}.obj", self.stem)
    }

    pub fn mtl_file(&self) -> String {
        format!("{}.mtl", self.stem)
    }

    pub fn texture_file(&self) -> String {
        format!("{}.png", self.stem)
    }
}

/// Bundles `mesh` with per-vertex `uv_coords` and the fused `texture`.
pub fn export_textured_face(mesh: &Mesh, uv_coords: &[[f64; 2]], texture: &UvMap, stem: &str) -> Result<TexturedAsset> {
    if uv_coords.is_empty() && !mesh.vertices.is_empty() {
        return Err(Error::MissingUv);
    }
    if texture.channels() != 3 {
        return Err(Error::dims("texture channels", 3, texture.channels()));
    }
    let asset = TexturedAsset {
        stem: stem.to_string(),
        obj: String::new(),
        mtl: String::new(),
        texture: texture.values.clone(),
    };
    let obj = encode_obj(&mesh.vertices, &mesh.triangles, Some(uv_coords), Some((&asset.mtl_file(), stem)))?;
    let mtl = encode_mtl(stem, &asset.texture_file());
    Ok(TexturedAsset { obj, mtl, ..asset })
}

/// Geometry-only OBJ text.
pub fn export_geometry(mesh: &Mesh) -> Result<String> {
    encode_obj(&mesh.vertices, &mesh.triangles, None, None)
}

/// Writes the OBJ, MTL and PNG files of `asset` into `dir` atomically.
pub fn write_textured_face(dir: impl AsRef<Path>, asset: &TexturedAsset) -> Result<[PathBuf; 3]> {
    let dir = dir.as_ref();
    let paths = [dir.join(asset.obj_file()), dir.join(asset.mtl_file()), dir.join(asset.texture_file())];
    write_atomic(&paths[2], &encode_png(&asset.texture)?)?;
    write_atomic(&paths[1], asset.mtl.as_bytes())?;
    write_atomic(&paths[0], asset.obj.as_bytes())?;
    Ok(paths)
}

/// Renders `mesh` with the texture sampled at its vertices and shaded by
/// the spherical-harmonics coefficients `sh` (nine per channel, interleaved).
pub fn relight(
    mesh: &Mesh,
    atlas: &UvAtlas,
    texture: &UvMap,
    sh: &[f64; 27],
    camera: &CameraSpec,
    raster: &RasterSettings,
) -> Result<Image> {
    if texture.channels() != 3 {
        return Err(Error::dims("texture channels", 3, texture.channels()));
    }
    let albedo = atlas.uv_to_vertices(texture)?;
    if albedo.len() != 3 * mesh.vertices.len() {
        return Err(Error::dims("mesh vertices", albedo.len() / 3, mesh.vertices.len()));
    }
    let colors = shade(&albedo, &mesh.normals, sh);
    let frags = rasterize_fragments(&project(&mesh.vertices, camera), &mesh.triangles, camera, raster)?;
    Ok(shade_fragments(&frags, &mesh.triangles, &colors))
}
