//! `S2FB` basis container.
//!
//! Layout, all little-endian: magic `S2FB`, `u16` version, five `u32` counts
//! (`Nv`, `Nt`, `K_id`, `K_exp`, `K_alb`), then fp32 arrays `mean_vertices`,
//! `id_basis`, `exp_basis`, `albedo_mean`, `albedo_basis`, `uv_coords`, then
//! `u32` triangles, `u32[240]` landmark indices, `u8[Nv]` part codes
//! (0 = none), and the contour candidates: a `u32` line count followed by
//! `u32` slot, `u32` length and that many `u32` vertex indices per line.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic::write_atomic;
use crate::model::{ContourLine, FaceBasis, FacePart, LANDMARK_COUNT};

pub const BASIS_MAGIC: &[u8; 4] = b"S2FB";
pub const BASIS_VERSION: u16 = 1;

/// Serializes `basis`; values are narrowed to fp32.
pub fn encode_basis(basis: &FaceBasis) -> Vec<u8> {
    let nv = basis.vertex_count();
    let mut out = Vec::new();
    out.extend_from_slice(BASIS_MAGIC);
    out.extend_from_slice(&BASIS_VERSION.to_le_bytes());
    for n in [nv, basis.triangle_count(), basis.k_id, basis.k_exp, basis.k_alb] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    let floats = [
        &basis.mean_vertices[..],
        &basis.id_basis,
        &basis.exp_basis,
        &basis.albedo_mean,
        &basis.albedo_basis,
    ];
    for arr in floats {
        for &v in arr {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    for uv in &basis.uv_coords {
        for &v in uv {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    for tri in &basis.triangles {
        for &i in tri {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    for &i in &basis.landmark_indices {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out.extend(basis.part_membership.iter().map(|p| p.map_or(0, |p| p.code())));
    out.extend_from_slice(&(basis.contour_candidates.len() as u32).to_le_bytes());
    for line in &basis.contour_candidates {
        out.extend_from_slice(&line.slot.to_le_bytes());
        out.extend_from_slice(&(line.candidates.len() as u32).to_le_bytes());
        for &c in &line.candidates {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format {
                offset: self.pos,
                message: format!("truncated while reading {what} ({n} bytes needed, {} left)", self.bytes.len() - self.pos),
            }),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("four bytes")))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let len = n.checked_mul(4).ok_or_else(|| Error::Format {
            offset: self.pos,
            message: format!("{what} length overflows"),
        })?;
        Ok(self
            .take(len, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64)
            .collect())
    }

    /// `u32` index below `bound`; violations report the index's own offset.
    fn index(&mut self, bound: usize, what: &str) -> Result<u32> {
        let at = self.pos;
        let i = self.u32(what)?;
        if i as usize >= bound {
            return Err(Error::Format {
                offset: at,
                message: format!("{what} index {i} out of range (bound {bound})"),
            });
        }
        Ok(i)
    }
}

/// Parses a container, checking sizes and index bounds.
pub fn decode_basis(bytes: &[u8]) -> Result<FaceBasis> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != BASIS_MAGIC {
        return Err(Error::Format { offset: 0, message: "bad magic, expected S2FB".into() });
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().expect("two bytes"));
    if version != BASIS_VERSION {
        return Err(Error::Format { offset: 4, message: format!("unsupported version {version}") });
    }
    let mut counts = [0usize; 5];
    for (c, what) in counts.iter_mut().zip(["Nv", "Nt", "K_id", "K_exp", "K_alb"]) {
        *c = r.u32(what)? as usize;
    }
    let [nv, nt, k_id, k_exp, k_alb] = counts;
    let mean_vertices = r.f32s(3 * nv, "mean_vertices")?;
    let id_basis = r.f32s(3 * nv * k_id, "id_basis")?;
    let exp_basis = r.f32s(3 * nv * k_exp, "exp_basis")?;
    let albedo_mean = r.f32s(3 * nv, "albedo_mean")?;
    let albedo_basis = r.f32s(3 * nv * k_alb, "albedo_basis")?;
    let uv_coords = r.f32s(2 * nv, "uv_coords")?.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push([r.index(nv, "triangle")?, r.index(nv, "triangle")?, r.index(nv, "triangle")?]);
    }
    let landmark_indices = (0..LANDMARK_COUNT).map(|_| r.index(nv, "landmark")).collect::<Result<Vec<_>>>()?;
    let at = r.pos;
    let part_membership = r
        .take(nv, "part codes")?
        .iter()
        .enumerate()
        .map(|(i, &c)| match c {
            0 => Ok(None),
            _ => FacePart::from_code(c).map(Some).ok_or_else(|| Error::Format {
                offset: at + i,
                message: format!("unknown part code {c}"),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    let lines = r.u32("contour line count")?;
    let mut contour_candidates = Vec::new();
    for _ in 0..lines {
        let slot = r.index(LANDMARK_COUNT, "contour slot")?;
        let len = r.u32("contour length")? as usize;
        if len > (bytes.len() - r.pos) / 4 {
            return Err(Error::Format {
                offset: r.pos - 4,
                message: format!("contour length {len} exceeds the remaining payload"),
            });
        }
        let candidates = (0..len).map(|_| r.index(nv, "contour candidate")).collect::<Result<Vec<_>>>()?;
        contour_candidates.push(ContourLine { slot, candidates });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos,
            message: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    let basis = FaceBasis {
        mean_vertices,
        id_basis,
        exp_basis,
        albedo_mean,
        albedo_basis,
        triangles,
        uv_coords,
        landmark_indices,
        part_membership,
        contour_candidates,
        k_id,
        k_exp,
        k_alb,
    };
    basis.validate()?;
    Ok(basis)
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<FaceBasis> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_basis(&bytes)
}

pub fn save_basis(path: impl AsRef<Path>, basis: &FaceBasis) -> Result<()> {
    write_atomic(path, &encode_basis(basis))
}
