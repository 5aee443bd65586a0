//! Input loading and artifact writing shared by the commands.

use std::path::Path;

use anyhow::{bail, Context, Result};
use facesketch::io::{fit_square_point, load_basis, write_atomic};
use facesketch::model::{synthetic_basis, FaceBasis, SyntheticBasisSpec, LANDMARK_COUNT};
use facesketch::objective::{LandmarkTargets, LossBreakdown};
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Loads a basis container, or builds the default synthetic basis.
pub fn basis_or_default(path: Option<&Path>) -> Result<FaceBasis> {
    match path {
        Some(p) => load_basis(p).with_context(|| format!("loading basis {}", p.display())),
        None => Ok(synthetic_basis(&SyntheticBasisSpec::default())?),
    }
}

/// Landmark file: 240 pixel positions with visibility flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarksFile {
    pub points: Vec<[f64; 2]>,
    pub visible: Vec<bool>,
}

impl LandmarksFile {
    pub fn from_targets(t: &LandmarkTargets) -> LandmarksFile {
        LandmarksFile {
            points: t.points.iter().map(|p| [p.x, p.y]).collect(),
            visible: t.visible.clone(),
        }
    }
}

/// Reads landmarks given in the frame of a `width x height` input and maps
/// them into the square frame the input is normalized to.
pub fn read_landmarks(path: &Path, width: usize, height: usize, size: usize) -> Result<LandmarkTargets> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: LandmarksFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.points.len() != LANDMARK_COUNT || file.visible.len() != LANDMARK_COUNT {
        bail!("{}: expected {LANDMARK_COUNT} points and visibility flags", path.display());
    }
    let points: Vec<Vector2<f64>> = file
        .points
        .iter()
        .map(|&p| Vector2::from(fit_square_point(width, height, size, p)))
        .collect();
    let targets = LandmarkTargets {
        points,
        visible: file.visible,
    };
    targets.validate(size, size)?;
    Ok(targets)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

#[derive(Serialize)]
struct HistoryRecord<'a> {
    iteration: usize,
    stage: &'static str,
    #[serde(flatten)]
    loss: &'a LossBreakdown,
}

/// One JSON object per iteration; stages follow from the iteration budget.
pub fn write_history(path: &Path, history: &[LossBreakdown], iters: [usize; 3]) -> Result<()> {
    let mut out = Vec::new();
    for (i, loss) in history.iter().enumerate() {
        let stage = if i < iters[0] {
            "coarse"
        } else if i < iters[0] + iters[1] {
            "detail"
        } else {
            "joint"
        };
        serde_json::to_writer(&mut out, &HistoryRecord { iteration: i, stage, loss })?;
        out.push(b'\n');
    }
    write_atomic(path, &out)?;
    Ok(())
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
