use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::FacePart;
use crate::objective::landmarks::LandmarkTargets;
use crate::objective::prdl::PartTargets;
use crate::sketch::SketchImage;

/// Per-pixel part labels: `0` for background, [`FacePart::code`] otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl Segmentation {
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.width * self.height {
            return Err(Error::dims("segmentation labels", self.width * self.height, self.labels.len()));
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l != 0 && FacePart::from_code(l).is_none()) {
            return Err(Error::InvalidArgument(format!("invalid segmentation label {bad}")));
        }
        Ok(())
    }

    pub fn part_targets(&self) -> PartTargets {
        PartTargets::from_labels(&self.labels, self.width, self.height)
    }
}

/// Everything a fit is supervised with. Missing inputs disable their terms.
#[derive(Clone, Debug)]
pub struct Supervision {
    pub sketch: SketchImage,
    /// RGB photograph for the photometric and perception terms.
    pub image: Option<Image>,
    pub landmarks: Option<LandmarkTargets>,
    pub segmentation: Option<Segmentation>,
    /// Occlusion mask `M_C`, single channel.
    pub occlusion: Image,
}

impl Supervision {
    /// Sketch-only supervision with an all-ones occlusion mask.
    pub fn from_sketch(sketch: SketchImage) -> Supervision {
        let (w, h) = (sketch.pixels.width, sketch.pixels.height);
        Supervision {
            sketch,
            image: None,
            landmarks: None,
            segmentation: None,
            occlusion: Image::filled(w, h, 1, 1.0),
        }
    }

    pub fn width(&self) -> usize {
        self.sketch.pixels.width
    }

    pub fn height(&self) -> usize {
        self.sketch.pixels.height
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width(), self.height());
        if self.sketch.pixels.channels != 1 {
            return Err(Error::dims("sketch channels", 1, self.sketch.pixels.channels));
        }
        if self.occlusion.width != w || self.occlusion.height != h || self.occlusion.channels != 1 {
            return Err(Error::dims("occlusion mask", w * h, self.occlusion.data.len()));
        }
        if let Some(img) = &self.image {
            if img.width != w || img.height != h || img.channels != 3 {
                return Err(Error::dims("supervision image", 3 * w * h, img.data.len()));
            }
        }
        if let Some(l) = &self.landmarks {
            l.validate(w, h)?;
        }
        if let Some(s) = &self.segmentation {
            s.validate()?;
            if s.width != w || s.height != h {
                return Err(Error::dims("segmentation", w * h, s.labels.len()));
            }
        }
        Ok(())
    }
}
