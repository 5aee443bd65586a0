//! Dense floating point images.

/// Row-major image with interleaved channels, values nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels, "image buffer size");
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    /// Builds an image by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn flip_horizontal(&self) -> Image {
        Image::from_fn(self.width, self.height, self.channels, |x, y, c| {
            self.get(self.width - 1 - x, y, c)
        })
    }

    /// Bilinear sample at continuous pixel coordinates where pixel `(x, y)`
    /// has its center at `(x + 0.5, y + 0.5)`. Coordinates are clamped to the
    /// border.
    pub fn sample_bilinear(&self, u: f64, v: f64, c: usize) -> f64 {
        let fx = (u - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (v - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let top = self.get(x0, y0, c) * (1.0 - tx) + self.get(x1, y0, c) * tx;
        let bottom = self.get(x0, y1, c) * (1.0 - tx) + self.get(x1, y1, c) * tx;
        top * (1.0 - ty) + bottom * ty
    }

    /// Replicates a single-channel image into `channels` channels.
    pub fn broadcast(&self, channels: usize) -> Image {
        assert_eq!(self.channels, 1);
        Image::from_fn(self.width, self.height, channels, |x, y, _| self.get(x, y, 0))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}
