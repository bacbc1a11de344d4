//! Raster containers shared by every stage.
//!
//! All rasters are row-major and at least 1×1. The sample type decides the
//! role: `u8` for graymaps (EPMs, filtered maps), `u32` for label maps,
//! `bool` for binary masks and `[u8; 3]` for colour renderings.

use crate::error::{Error, Result};

/// A non-empty row-major 2-D raster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit intensities. Carries EPMs: 0 is "no edge", 255 is "certain edge".
pub type GrayImage = Raster<u8>;
/// 32-bit region identifiers; 0 is reserved for boundary/unassigned pixels.
pub type LabelMap = Raster<u32>;
/// Binary masks.
pub type BinaryImage = Raster<bool>;
/// RGB triples, used for precision/recall renderings.
pub type RgbImage = Raster<[u8; 3]>;

impl<T> Raster<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        let valid = width >= 1
            && height >= 1
            && width.checked_mul(height).is_some_and(|n| n == data.len());
        if !valid {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster::new(width, height, data)
    }

    /// Builds a raster with the same shape as `self`; the shape is already
    /// known to be valid so this cannot fail.
    pub(crate) fn with_data<U>(&self, data: Vec<U>) -> Raster<U> {
        debug_assert_eq!(data.len(), self.data.len());
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; rasters are at least 1×1.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn index_of(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&T> {
        (x < self.width && y < self.height).then(|| &self.data[y * self.width + x])
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        self.with_data(self.data.iter().map(f).collect())
    }

    pub fn grid(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
        }
    }

    pub fn ensure_same_shape<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.dimensions() == other.dimensions() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dimensions(),
                right: other.dimensions(),
            })
        }
    }
}

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Raster::new(width, height, vec![value; width.saturating_mul(height)])
    }
}

impl<T: Copy> Raster<T> {
    /// Copies the `width × height` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if x + width > self.width || y + height > self.height {
            return Err(Error::InvalidArgument(format!(
                "crop {width}x{height}+{x}+{y} exceeds {}x{} raster",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for row in y..y + height {
            let start = row * self.width + x;
            data.extend_from_slice(&self.data[start..start + width]);
        }
        Raster::new(width, height, data)
    }

    pub fn pixel(&self, x: usize, y: usize) -> T {
        self.data[self.index_of(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = self.index_of(x, y);
        self.data[i] = value;
    }
}

impl<T> std::ops::Index<usize> for Raster<T> {
    type Output = T;

    fn index(&self, index: usize) -> &T {
        &self.data[index]
    }
}

impl<T> std::ops::IndexMut<usize> for Raster<T> {
    fn index_mut(&mut self, index: usize) -> &mut T {
        &mut self.data[index]
    }
}

/// Pixel adjacency used for flat zones, minima, flooding and components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    /// Neighbour offsets in row-major order. Every neighbour walk in the crate
    /// uses this order, which makes tie-breaking reproducible.
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4" => Ok(Connectivity::Four),
            "8" => Ok(Connectivity::Eight),
            other => Err(Error::InvalidArgument(format!(
                "connectivity must be 4 or 8, got {other:?}"
            ))),
        }
    }
}

/// Raster geometry, detached from the samples so it can be used while the
/// samples are mutably borrowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-bounds neighbours of the pixel at linear index `index`.
    pub fn neighbors(&self, index: usize, conn: Connectivity) -> impl Iterator<Item = usize> + '_ {
        let x = (index % self.width) as isize;
        let y = (index / self.width) as isize;
        let (w, h) = (self.width as isize, self.height as isize);
        conn.offsets().iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| (ny * w + nx) as usize)
        })
    }
}
