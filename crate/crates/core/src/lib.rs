//! Closed-shape extraction from edge probability maps (EPMs).
//!
//! An EPM is an 8-bit raster where bright pixels are likely object
//! boundaries. The crate turns it into a partition of guaranteed-closed
//! shapes (minima filtering followed by a watershed with one-pixel lines),
//! builds reference shapes from annotated polylines and scores detections at
//! the shape level with IoU matching.

pub mod baseline;
pub mod error;
pub mod eval;
pub mod groundtruth;
pub mod io;
pub mod morpho;
pub mod pipeline;
mod queue;
pub mod raster;
pub mod watershed;

pub use error::{Error, Result};
pub use morpho::{FilterOrder, FilterParams};
pub use raster::{BinaryImage, Connectivity, GrayImage, LabelMap, Raster, RgbImage};
pub use watershed::SegmentationResult;
