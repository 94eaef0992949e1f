use crate::{ImagingError, Result};

/// Value range a buffer's samples are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum PixelRange {
    /// `[0, 1]`
    #[default]
    Unit,
    /// `[-1, 1]`
    Signed,
}

/// Interleaved `H x W x C` raster of `f32` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    range: PixelRange,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, range: PixelRange, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(ImagingError::dim("image", format!("empty image {width}x{height}x{channels}")));
        }
        if data.len() != width * height * channels {
            return Err(ImagingError::dim(
                "image",
                format!("{width}x{height}x{channels} needs {} samples, got {}", width * height * channels, data.len()),
            ));
        }
        Ok(ImageBuffer { width, height, channels, range, data })
    }

    pub fn filled(width: usize, height: usize, value: &[f32]) -> Self {
        let data = (0..width * height).flat_map(|_| value.iter().copied()).collect();
        ImageBuffer { width, height, channels: value.len(), range: PixelRange::Unit, data }
    }

    pub fn from_fn(width: usize, height: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        ImageBuffer { width, height, channels, range: PixelRange::Unit, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn range(&self) -> PixelRange {
        self.range
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn same_dims(&self, other: &ImageBuffer) -> bool {
        (self.width, self.height, self.channels) == (other.width, other.height, other.channels)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Retags the range without touching samples.
    pub fn with_range(mut self, range: PixelRange) -> Self {
        self.range = range;
        self
    }

    pub fn plane(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().skip(c).step_by(self.channels).map(|&v| v as f64).collect(),
        }
    }

    pub fn from_planes(planes: &[Plane], range: PixelRange) -> Result<Self> {
        let Some(first) = planes.first() else {
            return Err(ImagingError::dim("from_planes", "no planes"));
        };
        if planes.iter().any(|p| p.width != first.width || p.height != first.height) {
            return Err(ImagingError::dim("from_planes", "planes differ in size"));
        }
        let n = first.width * first.height;
        let mut data = Vec::with_capacity(n * planes.len());
        for i in 0..n {
            for p in planes {
                data.push(p.data[i] as f32);
            }
        }
        ImageBuffer::new(first.width, first.height, planes.len(), range, data)
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(ImagingError::dim(
                "crop",
                format!("window {width}x{height}+{x0}+{y0} outside {}x{}", self.width, self.height),
            ));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(width * height * c);
        for y in y0..y0 + height {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + width * c]);
        }
        ImageBuffer::new(width, height, c, self.range, data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        ImageBuffer { data: self.data.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn clamp_unit(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }
}

/// Single-channel `f64` raster used by the evaluation-side filters.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height || width == 0 || height == 0 {
            return Err(ImagingError::dim("plane", format!("{width}x{height} with {} samples", data.len())));
        }
        Ok(Plane { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Plane { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_dims(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Plane { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}
