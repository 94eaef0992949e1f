//! Image-side machinery: raster buffers, color transforms, evaluation-exact
//! edge detection, full-reference quality metrics and the degradation
//! pipeline that manufactures (degraded, ground-truth) pairs.

mod buffer;
pub mod canny;
pub mod color;
pub mod degrade;
mod error;
pub mod filter;
pub mod io;
pub mod metrics;
pub mod synth;

pub use buffer::{ImageBuffer, PixelRange, Plane};
pub use canny::{canny, CannyParams, EdgeMap, EdgeMode};
pub use error::ImagingError;

pub type Result<T, E = ImagingError> = std::result::Result<T, E>;
