//! Marker-driven watershed with one-pixel watershed lines.
//!
//! Flooding follows Meyer's scheme on a 256-level FIFO queue:
//!
//! 1. Seed pixels keep their label. Their unlabelled neighbours are queued,
//!    scanning seeds in row-major order, keyed by their own intensity.
//! 2. The lowest, oldest entry is popped. If its labelled neighbours carry a
//!    single label the pixel takes it and queues its unqueued neighbours;
//!    if they carry two or more it becomes a line pixel and stops there.
//! 3. A pixel is queued at most once.
//!
//! Line pixels never propagate, so a few pixels can end up walled in by lines
//! without ever being reached. Each such pocket becomes a region of its own
//! (numbered after the seeded regions); turning it into line would leave line
//! pixels with no region on either side.

use crate::error::{Error, Result};
use crate::morpho::{filter_epm_ordered, FilterOrder, FilterParams};
use crate::queue::BucketQueue;
use crate::raster::{BinaryImage, Connectivity, GrayImage, Grid, LabelMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationResult {
    /// Region labels `1..=region_count`, 0 on watershed lines.
    pub labels: LabelMap,
    pub region_count: usize,
    /// True exactly where `labels` is 0.
    pub line_mask: BinaryImage,
}

impl SegmentationResult {
    pub fn line_pixel_count(&self) -> usize {
        self.line_mask.as_slice().iter().filter(|&&b| b).count()
    }
}

/// Labels every regional minimum (a flat zone with no strictly lower
/// neighbour) with `1..=K`, in row-major order of each zone's first pixel.
pub fn regional_minima(img: &GrayImage, conn: Connectivity) -> LabelMap {
    let grid = img.grid();
    let f = img.as_slice();
    let mut labels = vec![0u32; f.len()];
    let mut visited = vec![false; f.len()];
    let mut zone = Vec::new();
    let mut stack = Vec::new();
    let mut next = 1u32;

    for start in 0..f.len() {
        if visited[start] {
            continue;
        }
        let level = f[start];
        let mut is_minimum = true;
        zone.clear();
        visited[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            zone.push(p);
            for n in grid.neighbors(p, conn) {
                if f[n] < level {
                    is_minimum = false;
                } else if f[n] == level && !visited[n] {
                    visited[n] = true;
                    stack.push(n);
                }
            }
        }
        if is_minimum {
            for &p in &zone {
                labels[p] = next;
            }
            next += 1;
        }
    }
    img.with_data(labels)
}

pub fn count_regional_minima(img: &GrayImage, conn: Connectivity) -> usize {
    regional_minima(img, conn)
        .as_slice()
        .iter()
        .copied()
        .max()
        .unwrap_or(0) as usize
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Fresh,
    Queued,
    Labelled,
    Line,
}

/// Floods `img` from the nonzero pixels of `seeds`.
///
/// Seed labels are renumbered densely in increasing order; enclosed pockets
/// (see the module docs) receive the labels that follow.
pub fn watershed_meyer(img: &GrayImage, seeds: &LabelMap, conn: Connectivity) -> Result<SegmentationResult> {
    img.ensure_same_shape(seeds)?;
    let mut seed_ids: Vec<u32> = seeds.as_slice().iter().copied().filter(|&l| l != 0).collect();
    if seed_ids.is_empty() {
        return Err(Error::NoSeeds);
    }
    seed_ids.sort_unstable();
    seed_ids.dedup();

    let grid = img.grid();
    let f = img.as_slice();
    let mut label: Vec<u32> = seeds
        .as_slice()
        .iter()
        .map(|&l| {
            if l == 0 {
                0
            } else {
                seed_ids.binary_search(&l).unwrap() as u32 + 1
            }
        })
        .collect();
    let mut state: Vec<State> = label
        .iter()
        .map(|&l| if l == 0 { State::Fresh } else { State::Labelled })
        .collect();

    let mut queue = BucketQueue::new();
    for p in 0..f.len() {
        if label[p] != 0 {
            enqueue_fresh_neighbors(grid, conn, p, f, &mut state, &mut queue);
        }
    }

    while let Some((_, p)) = queue.pop() {
        let mut found = 0u32;
        let mut conflict = false;
        for n in grid.neighbors(p, conn) {
            let l = label[n];
            if l == 0 {
                continue;
            }
            if found == 0 {
                found = l;
            } else if found != l {
                conflict = true;
                break;
            }
        }
        debug_assert!(found != 0, "queued pixels always touch a labelled pixel");
        if conflict {
            state[p] = State::Line;
        } else {
            label[p] = found;
            state[p] = State::Labelled;
            enqueue_fresh_neighbors(grid, conn, p, f, &mut state, &mut queue);
        }
    }

    let mut region_count = seed_ids.len();
    let mut stack = Vec::new();
    for start in 0..f.len() {
        if state[start] != State::Fresh {
            continue;
        }
        region_count += 1;
        let pocket = region_count as u32;
        state[start] = State::Labelled;
        label[start] = pocket;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for n in grid.neighbors(p, conn) {
                if state[n] == State::Fresh {
                    state[n] = State::Labelled;
                    label[n] = pocket;
                    stack.push(n);
                }
            }
        }
    }

    let line_mask = img.with_data(state.iter().map(|&s| s == State::Line).collect());
    Ok(SegmentationResult {
        labels: img.with_data(label),
        region_count,
        line_mask,
    })
}

fn enqueue_fresh_neighbors(
    grid: Grid,
    conn: Connectivity,
    p: usize,
    f: &[u8],
    state: &mut [State],
    queue: &mut BucketQueue,
) {
    for n in grid.neighbors(p, conn) {
        if state[n] == State::Fresh {
            state[n] = State::Queued;
            queue.push(f[n], n);
        }
    }
}

/// Filters the EPM, seeds on its regional minima and floods it.
pub fn segment(epm: &GrayImage, params: FilterParams, conn: Connectivity) -> SegmentationResult {
    segment_ordered(epm, params, FilterOrder::default(), conn)
}

pub fn segment_ordered(
    epm: &GrayImage,
    params: FilterParams,
    order: FilterOrder,
    conn: Connectivity,
) -> SegmentationResult {
    let filtered = filter_epm_ordered(epm, params, order, conn);
    let seeds = regional_minima(&filtered, conn);
    watershed_meyer(&filtered, &seeds, conn).expect("every image has at least one regional minimum")
}
