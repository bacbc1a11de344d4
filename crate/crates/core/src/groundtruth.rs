//! Reference data: rasterized annotation strokes, reference label maps and
//! the row-band / tile layout of a map sheet.

use std::ops::Range;

use crate::baseline::label_components;
use crate::error::{Error, Result};
use crate::morpho::dilate_square;
use crate::raster::{BinaryImage, Connectivity, LabelMap};

/// Annotation strokes for one `width × height` image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolylineSet {
    width: usize,
    height: usize,
    polylines: Vec<Vec<(usize, usize)>>,
}

impl PolylineSet {
    pub fn new(width: usize, height: usize, polylines: Vec<Vec<(i64, i64)>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height, len: 0 });
        }
        let mut checked = Vec::with_capacity(polylines.len());
        for (index, line) in polylines.into_iter().enumerate() {
            if line.len() < 2 {
                return Err(Error::DegeneratePolyline {
                    index,
                    len: line.len(),
                });
            }
            let mut vertices = Vec::with_capacity(line.len());
            for (x, y) in line {
                if x < 0 || y < 0 || x as u64 >= width as u64 || y as u64 >= height as u64 {
                    return Err(Error::VertexOutOfBounds { x, y, width, height });
                }
                vertices.push((x as usize, y as usize));
            }
            checked.push(vertices);
        }
        Ok(PolylineSet {
            width,
            height,
            polylines: checked,
        })
    }

    /// Parses the plain-text annotation format: one polyline per line,
    /// vertices written `x,y` and separated by whitespace. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str, width: usize, height: usize) -> Result<Self> {
        let mut polylines = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| Error::PolylineSyntax {
                line: n + 1,
                message,
            };
            let vertices = line
                .split_whitespace()
                .map(|tok| {
                    let (x, y) = tok
                        .split_once(',')
                        .ok_or_else(|| syntax(format!("expected x,y but found {tok:?}")))?;
                    let x = x.parse().map_err(|_| syntax(format!("bad x in {tok:?}")))?;
                    let y = y.parse().map_err(|_| syntax(format!("bad y in {tok:?}")))?;
                    Ok((x, y))
                })
                .collect::<Result<Vec<(i64, i64)>>>()?;
            polylines.push(vertices);
        }
        PolylineSet::new(width, height, polylines)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn polylines(&self) -> &[Vec<(usize, usize)>] {
        &self.polylines
    }
}

/// Pixels of the 8-connected digital segment between `a` and `b`.
///
/// Endpoints are put in lexicographic order before stepping, so the segment
/// does not depend on the drawing direction.
pub fn segment_pixels(a: (usize, usize), b: (usize, usize)) -> Vec<(usize, usize)> {
    let (start, end) = if a <= b { (a, b) } else { (b, a) };
    let (mut x, mut y) = (start.0 as i64, start.1 as i64);
    let (x1, y1) = (end.0 as i64, end.1 as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push((x as usize, y as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Draws every consecutive vertex pair as an 8-connected segment.
pub fn rasterize_polylines(ps: &PolylineSet) -> BinaryImage {
    let mut img = BinaryImage::filled(ps.width, ps.height, false).expect("validated dimensions");
    for line in &ps.polylines {
        for pair in line.windows(2) {
            for (x, y) in segment_pixels(pair[0], pair[1]) {
                img.set(x, y, true);
            }
        }
    }
    img
}

/// Reference edge map: strokes thickened to 3 pixels.
pub fn make_edge_gt(ps: &PolylineSet) -> BinaryImage {
    dilate_square(&rasterize_polylines(ps), 1)
}

/// Reference shapes: 4-connected components of the non-edge pixels.
pub fn make_label_gt(edges: &BinaryImage) -> LabelMap {
    label_components(&edges.map(|&e| !e), Connectivity::Four)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Band {
    Train,
    Validation,
    Test,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Train, Band::Validation, Band::Test];

    pub fn name(self) -> &'static str {
        match self {
            Band::Train => "train",
            Band::Validation => "val",
            Band::Test => "test",
        }
    }
}

/// Row bands (half-open) and tile size of a sheet split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
    pub tile_size: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0..4000,
            validation: 4000..5000,
            test: 5000..6500,
            tile_size: 500,
        }
    }
}

impl SplitSpec {
    pub fn band(&self, band: Band) -> Range<usize> {
        match band {
            Band::Train => self.train.clone(),
            Band::Validation => self.validation.clone(),
            Band::Test => self.test.clone(),
        }
    }
}

/// A tile, possibly partial at the right or bottom edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tile {
    pub band: Band,
    pub row: usize,
    pub col: usize,
    pub width: usize,
    pub height: usize,
}

impl Tile {
    pub fn is_full(&self, tile_size: usize) -> bool {
        self.width == tile_size && self.height == tile_size
    }

    pub fn file_name(&self) -> String {
        tile_file_name(self.row, self.col)
    }
}

pub fn tile_file_name(row: usize, col: usize) -> String {
    format!("tile_r{row:05}_c{col:05}.pgm")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub bands: [(Band, Range<usize>); 3],
    pub tiles: Vec<Tile>,
}

impl SplitPlan {
    pub fn tiles_in(&self, band: Band) -> impl Iterator<Item = &Tile> {
        self.tiles.iter().filter(move |t| t.band == band)
    }
}

/// Validates the bands against the image and lists the tiles covering each
/// band, partial edge tiles included.
pub fn split_rows(width: usize, height: usize, spec: &SplitSpec) -> Result<SplitPlan> {
    if spec.tile_size == 0 {
        return Err(Error::InvalidArgument("tile size must be positive".into()));
    }
    let bands = Band::ALL.map(|b| (b, spec.band(b)));
    for (band, range) in &bands {
        if range.start >= range.end {
            return Err(Error::OverlappingBands(format!(
                "{} band [{}, {}) is empty",
                band.name(),
                range.start,
                range.end
            )));
        }
    }
    for pair in bands.windows(2) {
        let ((a, ra), (b, rb)) = (&pair[0], &pair[1]);
        if ra.end > rb.start {
            return Err(Error::OverlappingBands(format!(
                "{} [{}, {}) runs into {} [{}, {})",
                a.name(),
                ra.start,
                ra.end,
                b.name(),
                rb.start,
                rb.end
            )));
        }
    }
    let last = &bands[2].1;
    if last.end > height {
        return Err(Error::InvalidRowRange {
            start: last.start,
            end: last.end,
            height,
        });
    }

    let ts = spec.tile_size;
    let mut tiles = Vec::new();
    for (band, range) in &bands {
        for row in range.clone().step_by(ts) {
            for col in (0..width).step_by(ts) {
                tiles.push(Tile {
                    band: *band,
                    row,
                    col,
                    width: ts.min(width - col),
                    height: ts.min(range.end - row),
                });
            }
        }
    }
    Ok(SplitPlan { bands, tiles })
}
