//! Threshold-and-label baseline: shapes are the connected components of
//! pixels whose edge probability is strictly below a threshold.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, Connectivity, GrayImage, LabelMap};

/// Marks interior pixels: `epm(p) < t`. Accepts `t` in `0..=255`.
pub fn threshold_epm(epm: &GrayImage, t: u32) -> Result<BinaryImage> {
    if t > 255 {
        return Err(Error::ThresholdOutOfRange(t));
    }
    Ok(epm.map(|&v| u32::from(v) < t))
}

/// Labels the connected components of set pixels `1..=K` in row-major order of
/// first encounter. Unset pixels get 0.
pub fn label_components(mask: &BinaryImage, conn: Connectivity) -> LabelMap {
    let grid = mask.grid();
    let on = mask.as_slice();
    let mut labels = vec![0u32; on.len()];
    let mut queue = VecDeque::new();
    let mut next = 0u32;
    for start in 0..on.len() {
        if !on[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for n in grid.neighbors(p, conn) {
                if on[n] && labels[n] == 0 {
                    labels[n] = next;
                    queue.push_back(n);
                }
            }
        }
    }
    mask.with_data(labels)
}

/// Threshold then label: the complete baseline.
pub fn baseline_shapes(epm: &GrayImage, t: u32, conn: Connectivity) -> Result<LabelMap> {
    Ok(label_components(&threshold_epm(epm, t)?, conn))
}
