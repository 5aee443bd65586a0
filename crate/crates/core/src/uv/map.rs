use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::image::Image;

/// Edge length of the UV grid used for displacement and texture maps.
pub const UV_SIZE: usize = 256;

/// What the channels of a [`UvMap`] hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UvSemantic {
    Position,
    Normal,
    Scalar,
    Color,
}

impl UvSemantic {
    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(code: u8) -> Option<UvSemantic> {
        [UvSemantic::Position, UvSemantic::Normal, UvSemantic::Scalar, UvSemantic::Color]
            .get(code as usize)
            .copied()
    }
}

/// Attribute grid over UV space. Texel `(row, col)` has its center at
/// `u = (col + 0.5) / size`, `v = (row + 0.5) / size`.
#[derive(Clone, Debug, PartialEq)]
pub struct UvMap {
    pub values: Image,
    /// Per-texel coverage in `[0, 1]`; zero where no triangle covers the texel.
    pub validity: Vec<f64>,
    pub semantic: UvSemantic,
}

const MAGIC: &[u8; 4] = b"FSUV";

impl UvMap {
    pub fn new(size: usize, channels: usize, semantic: UvSemantic) -> UvMap {
        UvMap {
            values: Image::new(size, size, channels),
            validity: vec![0.0; size * size],
            semantic,
        }
    }

    pub fn size(&self) -> usize {
        self.values.width
    }

    pub fn channels(&self) -> usize {
        self.values.channels
    }

    pub fn texel(&self, t: usize) -> &[f64] {
        let c = self.channels();
        &self.values.data[t * c..(t + 1) * c]
    }

    pub fn texel_mut(&mut self, t: usize) -> &mut [f64] {
        let c = self.channels();
        &mut self.values.data[t * c..(t + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.values.data.iter().chain(&self.validity).all(|v| v.is_finite())
    }

    /// 8-bit preview: values mapped through `(v - lo) / (hi - lo)` over valid
    /// texels, invalid texels black.
    pub fn preview(&self) -> Image {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (t, &w) in self.validity.iter().enumerate() {
            if w > 0.0 {
                for &v in self.texel(t) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        let (lo, scale) = match self.semantic {
            UvSemantic::Color => (0.0, 1.0),
            UvSemantic::Normal => (-1.0, 0.5),
            _ if hi > lo => (lo, 1.0 / (hi - lo)),
            _ => (lo, 0.0),
        };
        let size = self.size();
        let channels = self.channels();
        Image::from_fn(size, size, channels, |x, y, c| {
            let t = y * size + x;
            if self.validity[t] > 0.0 {
                ((self.values.data[t * channels + c] - lo) * scale).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
    }

    /// Exact little-endian fp32 persistence: a 16-byte header
    /// (`FSUV`, u32 size, u32 channels, u8 semantic, 3 pad bytes) followed by
    /// one plane per channel and a final validity plane.
    pub fn write_raw(&self, mut w: impl Write) -> std::io::Result<()> {
        let size = self.size();
        let channels = self.channels();
        let mut buf = Vec::with_capacity(16 + 4 * size * size * (channels + 1));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(size as u32).to_le_bytes());
        buf.extend_from_slice(&(channels as u32).to_le_bytes());
        buf.extend_from_slice(&[self.semantic.code(), 0, 0, 0]);
        for c in 0..channels {
            for t in 0..size * size {
                buf.extend_from_slice(&(self.values.data[t * channels + c] as f32).to_le_bytes());
            }
        }
        for &v in &self.validity {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_raw(mut r: impl Read) -> Result<UvMap> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Format { offset: 0, message: e.to_string() })?;
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::Format { offset: 0, message: "bad uv map magic".into() });
        }
        let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let (size, channels) = (word(4), word(8));
        let semantic = UvSemantic::from_code(bytes[12])
            .ok_or_else(|| Error::Format { offset: 12, message: format!("unknown semantic {}", bytes[12]) })?;
        let expected = size
            .checked_mul(size)
            .and_then(|n| n.checked_mul(4 * (channels + 1)))
            .and_then(|n| n.checked_add(16))
            .ok_or_else(|| Error::Format { offset: 4, message: "size overflow".into() })?;
        if bytes.len() != expected {
            return Err(Error::Format {
                offset: bytes.len().min(expected),
                message: format!("expected {expected} bytes, found {}", bytes.len()),
            });
        }
        let float = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
        let n = size * size;
        let mut map = UvMap::new(size, channels, semantic);
        for c in 0..channels {
            for t in 0..n {
                map.values.data[t * channels + c] = float(16 + 4 * (c * n + t));
            }
        }
        for t in 0..n {
            map.validity[t] = float(16 + 4 * (channels * n + t));
        }
        Ok(map)
    }
}
