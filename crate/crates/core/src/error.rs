use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: String },

    #[error("size mismatch: header declares {declared} payload bytes, file holds {found}")]
    SizeMismatch { declared: usize, found: usize },

    #[error("invalid raster dimensions {width}x{height} for {len} samples")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("marker is below mask at pixel ({x}, {y})")]
    MarkerBelowMask { x: usize, y: usize },

    #[error("no seeds")]
    NoSeeds,

    #[error("threshold {0} out of range [0, 255]")]
    ThresholdOutOfRange(u32),

    #[error("IoU threshold {0} out of range (0.5, 1]")]
    IouThresholdOutOfRange(f64),

    #[error("invalid row range [{start}, {end}) for height {height}")]
    InvalidRowRange {
        start: usize,
        end: usize,
        height: usize,
    },

    #[error("vertex ({x}, {y}) outside {width}x{height} image")]
    VertexOutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },

    #[error("polyline {index} has {len} vertices, at least 2 are required")]
    DegeneratePolyline { index: usize, len: usize },

    #[error("polyline file line {line}: {message}")]
    PolylineSyntax { line: usize, message: String },

    #[error("row bands overlap or are out of order: {0}")]
    OverlappingBands(String),

    #[error("class counts sum to zero")]
    EmptyClassCounts,

    #[error("calibration grid is empty")]
    EmptyGrid,

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
