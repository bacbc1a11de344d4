//! Minima filtering on 8-bit images: reconstruction by erosion, h-minima,
//! area closing, and the square dilation used to thicken ground-truth strokes.
//!
//! Intensity arithmetic saturates at 255.

use crate::error::{Error, Result};
use crate::queue::BucketQueue;
use crate::raster::{BinaryImage, Connectivity, GrayImage};

/// Minima filter settings: dynamic threshold `h` and area threshold in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FilterParams {
    pub h: u8,
    pub lambda_area: usize,
}

impl FilterParams {
    /// Weaker filtering, more regions (`h = 3`, `λ = 250`).
    pub const SET_A: FilterParams = FilterParams {
        h: 3,
        lambda_area: 250,
    };
    /// Stronger filtering, less over-segmentation (`h = 7`, `λ = 400`).
    pub const SET_B: FilterParams = FilterParams {
        h: 7,
        lambda_area: 400,
    };

    pub fn new(h: u8, lambda_area: usize) -> Self {
        FilterParams { h, lambda_area }
    }
}

/// Order in which the two minima filters are chained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FilterOrder {
    #[default]
    AreaThenDynamic,
    DynamicThenArea,
}

/// Reconstruction by erosion of `marker` over `mask`.
///
/// The result is the fixed point of `f ↦ max(erode(f), mask)` started from
/// `marker`: every pixel takes the lowest level reachable from some marker
/// pixel along a path, where a path costs the maximum of the starting marker
/// value and the mask values it crosses.
pub fn reconstruct_by_erosion(marker: &GrayImage, mask: &GrayImage, conn: Connectivity) -> Result<GrayImage> {
    marker.ensure_same_shape(mask)?;
    if let Some(i) = marker
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .position(|(m, k)| m < k)
    {
        return Err(Error::MarkerBelowMask {
            x: i % marker.width(),
            y: i / marker.width(),
        });
    }

    let grid = marker.grid();
    let mask = mask.as_slice();
    let mut out = marker.clone();
    let mut queue = BucketQueue::new();
    for (i, &v) in out.as_slice().iter().enumerate() {
        queue.push(v, i);
    }
    while let Some((level, p)) = queue.pop() {
        if level != out[p] {
            continue; // stale entry
        }
        for n in grid.neighbors(p, conn) {
            let candidate = level.max(mask[n]);
            if candidate < out[n] {
                out[n] = candidate;
                queue.push(candidate, n);
            }
        }
    }
    Ok(out)
}

/// h-minima transform: reconstruction by erosion of `img + h` over `img`.
///
/// Minima whose dynamic is below `h` are filled; the surviving minima are
/// raised by `h` (capped at 255).
pub fn h_minima(img: &GrayImage, h: u8, conn: Connectivity) -> GrayImage {
    if h == 0 {
        return img.clone();
    }
    let marker = img.map(|&v| v.saturating_add(h));
    reconstruct_by_erosion(&marker, img, conn).expect("marker dominates mask by construction")
}

/// Area closing: each pixel is raised to the lowest level at which its
/// connected component of the lower level set reaches `lambda_area` pixels
/// (or spans the whole image).
///
/// Union-find over pixels sorted by increasing intensity; a component stops
/// absorbing its neighbours once it is large enough.
pub fn area_closing(img: &GrayImage, lambda_area: usize, conn: Connectivity) -> GrayImage {
    if lambda_area <= 1 {
        return img.clone();
    }
    const UNSEEN: usize = usize::MAX;

    let grid = img.grid();
    let f = img.as_slice();
    let order = sort_by_level(f);
    let mut parent = vec![UNSEEN; f.len()];
    let mut area = vec![0usize; f.len()];

    for &p in &order {
        parent[p] = p;
        area[p] = 1;
        for q in grid.neighbors(p, conn) {
            if parent[q] == UNSEEN {
                continue;
            }
            let r = find_root(&mut parent, q);
            if r == p {
                continue;
            }
            if f[r] == f[p] || area[r] < lambda_area {
                area[p] += area[r];
                parent[r] = p;
            } else {
                area[p] = area[p].max(lambda_area);
            }
        }
    }

    // Parents are always processed after their children, so a reverse sweep
    // sees each parent's output before its children need it.
    let mut out = vec![0u8; f.len()];
    for &p in order.iter().rev() {
        out[p] = if parent[p] == p { f[p] } else { out[parent[p]] };
    }
    img.with_data(out)
}

/// Binary dilation by the `(2·radius + 1)²` square (Chebyshev ball).
pub fn dilate_square(img: &BinaryImage, radius: usize) -> BinaryImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = img.dimensions();
    let src = img.as_slice();
    let mut rows = vec![false; src.len()];
    for y in 0..h {
        dilate_line(&src[y * w..(y + 1) * w], &mut rows[y * w..(y + 1) * w], radius);
    }
    let mut out = vec![false; src.len()];
    let mut column = vec![false; h];
    let mut dilated = vec![false; h];
    for x in 0..w {
        for y in 0..h {
            column[y] = rows[y * w + x];
        }
        dilate_line(&column, &mut dilated, radius);
        for y in 0..h {
            out[y * w + x] = dilated[y];
        }
    }
    img.with_data(out)
}

/// Chains [`area_closing`] and [`h_minima`] (area first by default).
pub fn filter_epm(epm: &GrayImage, params: FilterParams, conn: Connectivity) -> GrayImage {
    filter_epm_ordered(epm, params, FilterOrder::default(), conn)
}

pub fn filter_epm_ordered(epm: &GrayImage, params: FilterParams, order: FilterOrder, conn: Connectivity) -> GrayImage {
    match order {
        FilterOrder::AreaThenDynamic => {
            h_minima(&area_closing(epm, params.lambda_area, conn), params.h, conn)
        }
        FilterOrder::DynamicThenArea => {
            area_closing(&h_minima(epm, params.h, conn), params.lambda_area, conn)
        }
    }
}

/// Pixel indices sorted by increasing value, row-major within a value.
fn sort_by_level(f: &[u8]) -> Vec<usize> {
    let mut start = [0usize; 257];
    for &v in f {
        start[v as usize + 1] += 1;
    }
    for i in 1..257 {
        start[i] += start[i - 1];
    }
    let mut order = vec![0usize; f.len()];
    for (i, &v) in f.iter().enumerate() {
        order[start[v as usize]] = i;
        start[v as usize] += 1;
    }
    order
}

fn find_root(parent: &mut [usize], mut x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    while parent[x] != root {
        let next = parent[x];
        parent[x] = root;
        x = next;
    }
    root
}

/// 1-D running-window "any" over `[i - radius, i + radius]`.
fn dilate_line(src: &[bool], dst: &mut [bool], radius: usize) {
    let n = src.len();
    let mut prefix = vec![0usize; n + 1];
    for (i, &v) in src.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v as usize;
    }
    for (i, d) in dst.iter_mut().enumerate() {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(n);
        *d = prefix[hi] > prefix[lo];
    }
}
