use crate::error::{Error, Result};

/// Number of 2D landmarks carried by every basis.
pub const LANDMARK_COUNT: usize = 240;

/// Facial parts used for segmentation and part-based losses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacePart {
    LeftEye,
    RightEye,
    LeftEyebrow,
    RightEyebrow,
    UpLip,
    DownLip,
    Nose,
    Skin,
}

impl FacePart {
    pub const ALL: [FacePart; 8] = [
        FacePart::LeftEye,
        FacePart::RightEye,
        FacePart::LeftEyebrow,
        FacePart::RightEyebrow,
        FacePart::UpLip,
        FacePart::DownLip,
        FacePart::Nose,
        FacePart::Skin,
    ];

    /// Label code used in containers and segmentation maps; `0` is reserved
    /// for "none"/background.
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<FacePart> {
        match code {
            1..=8 => Some(Self::ALL[code as usize - 1]),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FacePart::LeftEye => "left_eye",
            FacePart::RightEye => "right_eye",
            FacePart::LeftEyebrow => "left_eyebrow",
            FacePart::RightEyebrow => "right_eyebrow",
            FacePart::UpLip => "up_lip",
            FacePart::DownLip => "down_lip",
            FacePart::Nose => "nose",
            FacePart::Skin => "skin",
        }
    }
}

/// Ordered candidate vertices for one cheek-contour landmark.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourLine {
    /// Landmark slot in `0..LANDMARK_COUNT`.
    pub slot: u32,
    pub candidates: Vec<u32>,
}

/// Linear morphable model.
///
/// Per-vertex arrays are flat and interleaved (`[x0, y0, z0, x1, ...]`).
/// Basis matrices are row-major with `3 * Nv` rows and `K` columns, so the
/// row `3 * v + axis` holds the coefficients of vertex `v` along `axis`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceBasis {
    pub mean_vertices: Vec<f64>,
    pub id_basis: Vec<f64>,
    pub exp_basis: Vec<f64>,
    pub albedo_mean: Vec<f64>,
    pub albedo_basis: Vec<f64>,
    pub triangles: Vec<[u32; 3]>,
    pub uv_coords: Vec<[f64; 2]>,
    pub landmark_indices: Vec<u32>,
    pub part_membership: Vec<Option<FacePart>>,
    pub contour_candidates: Vec<ContourLine>,
    pub k_id: usize,
    pub k_exp: usize,
    pub k_alb: usize,
}

impl FaceBasis {
    pub fn vertex_count(&self) -> usize {
        self.mean_vertices.len() / 3
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Vertices carrying `part`.
    pub fn part_vertices(&self, part: FacePart) -> Vec<u32> {
        self.part_membership
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Some(part))
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertex_count();
        if self.mean_vertices.len() != 3 * nv || nv == 0 {
            return Err(Error::InvalidBasis("mean vertices are empty or ragged".into()));
        }
        let check = |what: &'static str, len: usize, expected: usize| {
            if len == expected {
                Ok(())
            } else {
                Err(Error::dims(what, expected, len))
            }
        };
        check("id_basis", self.id_basis.len(), 3 * nv * self.k_id)?;
        check("exp_basis", self.exp_basis.len(), 3 * nv * self.k_exp)?;
        check("albedo_mean", self.albedo_mean.len(), 3 * nv)?;
        check("albedo_basis", self.albedo_basis.len(), 3 * nv * self.k_alb)?;
        check("uv_coords", self.uv_coords.len(), nv)?;
        check("landmark_indices", self.landmark_indices.len(), LANDMARK_COUNT)?;
        check("part_membership", self.part_membership.len(), nv)?;
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= nv) {
                return Err(Error::InvalidBasis(format!(
                    "triangle {t} references vertex {bad} but the model has {nv} vertices"
                )));
            }
        }
        for (v, uv) in self.uv_coords.iter().enumerate() {
            if !uv.iter().all(|c| (0.0..=1.0).contains(c)) {
                return Err(Error::InvalidBasis(format!("uv of vertex {v} outside [0,1]^2")));
            }
        }
        if let Some(&bad) = self.landmark_indices.iter().find(|&&i| i as usize >= nv) {
            return Err(Error::InvalidBasis(format!("landmark index {bad} out of range")));
        }
        // Meshes smaller than the landmark set cannot hold distinct landmarks.
        if nv >= LANDMARK_COUNT {
            let mut sorted = self.landmark_indices.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidBasis("landmark indices are not distinct".into()));
            }
        }
        for line in &self.contour_candidates {
            if line.slot as usize >= LANDMARK_COUNT {
                return Err(Error::InvalidBasis(format!("contour slot {} out of range", line.slot)));
            }
            if line.candidates.is_empty() {
                return Err(Error::InvalidBasis(format!(
                    "contour line for slot {} has no candidates",
                    line.slot
                )));
            }
            if let Some(&bad) = line.candidates.iter().find(|&&i| i as usize >= nv) {
                return Err(Error::InvalidBasis(format!("contour candidate {bad} out of range")));
            }
        }
        Ok(())
    }
}
