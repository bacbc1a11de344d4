//! Brute-force oracles and invariant checkers shared by the integration
//! tests. Nothing here calls into the algorithms it is used to check; only
//! the raster containers are borrowed from the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use morphoseg::{BinaryImage, GrayImage, LabelMap};
use rand::rngs::StdRng;
use rand::Rng;

/// 4-neighbours of `(x, y)`, in up/left/right/down order.
pub fn n4(w: usize, h: usize, i: usize) -> Vec<usize> {
    let (x, y) = (i % w, i / w);
    let mut v = Vec::with_capacity(4);
    if y > 0 {
        v.push(i - w);
    }
    if x > 0 {
        v.push(i - 1);
    }
    if x + 1 < w {
        v.push(i + 1);
    }
    if y + 1 < h {
        v.push(i + w);
    }
    v
}

/// Reconstruction by erosion as the fixed point of
/// `f ↦ max(erode(f), mask)`, iterated from the marker.
pub fn fixed_point_reconstruction(marker: &[u8], mask: &[u8], w: usize, h: usize) -> Vec<u8> {
    let mut cur = marker.to_vec();
    loop {
        let next: Vec<u8> = (0..cur.len())
            .map(|i| {
                let eroded = n4(w, h, i).into_iter().map(|n| cur[n]).fold(cur[i], u8::min);
                eroded.max(mask[i])
            })
            .collect();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

pub fn oracle_h_minima(img: &[u8], hv: u8, w: usize, h: usize) -> Vec<u8> {
    let marker: Vec<u8> = img.iter().map(|v| v.saturating_add(hv)).collect();
    fixed_point_reconstruction(&marker, img, w, h)
}

/// Component of `{q : f(q) <= t}` containing `p`, by plain flood fill.
fn level_component(img: &[u8], w: usize, h: usize, p: usize, t: u8) -> usize {
    let mut seen = vec![false; img.len()];
    let mut stack = vec![p];
    seen[p] = true;
    let mut size = 0;
    while let Some(q) = stack.pop() {
        size += 1;
        for n in n4(w, h, q) {
            if !seen[n] && img[n] <= t {
                seen[n] = true;
                stack.push(n);
            }
        }
    }
    size
}

/// Area closing by definition: for every threshold level, lower-level
/// components smaller than `lambda` (and not the whole image) are filled, so
/// each pixel ends at the first level where its component is big enough.
pub fn oracle_area_closing(img: &[u8], lambda: usize, w: usize, h: usize) -> Vec<u8> {
    let max = *img.iter().max().unwrap();
    (0..img.len())
        .map(|p| {
            (img[p]..=max)
                .find(|&t| {
                    let size = level_component(img, w, h, p, t);
                    size >= lambda || size == img.len()
                })
                .unwrap()
        })
        .collect()
}

/// Regional minima through a descent fixed point: a pixel "can descend" if it
/// has a lower neighbour or an equal neighbour that can descend. Pixels that
/// cannot descend form the minima, labelled by their smallest pixel index.
pub fn oracle_regional_minima(img: &[u8], w: usize, h: usize) -> Vec<u32> {
    let n = img.len();
    let mut descends: Vec<bool> = (0..n)
        .map(|i| n4(w, h, i).into_iter().any(|q| img[q] < img[i]))
        .collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !descends[i] && n4(w, h, i).into_iter().any(|q| img[q] == img[i] && descends[q]) {
                descends[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let keep: Vec<bool> = descends.iter().map(|d| !d).collect();
    let same = |a: usize, b: usize| img[a] == img[b];
    component_ranks(&keep, w, h, same)
}

/// Dense 1..K labels of the 4-components of `keep` (under the extra
/// adjacency predicate), ordered by smallest member index. Uses min-index
/// relaxation instead of a traversal.
fn component_ranks(keep: &[bool], w: usize, h: usize, joins: impl Fn(usize, usize) -> bool) -> Vec<u32> {
    let n = keep.len();
    let mut root: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !keep[i] {
                continue;
            }
            for q in n4(w, h, i) {
                if keep[q] && joins(i, q) && root[q] < root[i] {
                    root[i] = root[q];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let roots: BTreeSet<usize> = (0..n).filter(|&i| keep[i]).map(|i| root[i]).collect();
    let rank: BTreeMap<usize, u32> = roots.iter().enumerate().map(|(k, &r)| (r, k as u32 + 1)).collect();
    (0..n).map(|i| if keep[i] { rank[&root[i]] } else { 0 }).collect()
}

pub fn oracle_components(mask: &[bool], w: usize, h: usize) -> Vec<u32> {
    component_ranks(mask, w, h, |_, _| true)
}

/// Watershed flooding simulated with an explicit list of queue entries; the
/// next entry is found by linear scan for the smallest (level, arrival).
/// Pixels never reached become extra regions, one per 4-connected pocket.
/// Returns labels with 0 on lines.
pub fn oracle_watershed(img: &[u8], seeds: &[u32], w: usize, h: usize) -> Vec<u32> {
    let n = img.len();
    let ids: BTreeSet<u32> = seeds.iter().copied().filter(|&s| s != 0).collect();
    let dense: BTreeMap<u32, u32> = ids.iter().enumerate().map(|(k, &s)| (s, k as u32 + 1)).collect();
    let mut label: Vec<u32> = seeds.iter().map(|s| dense.get(s).copied().unwrap_or(0)).collect();
    let mut queued = vec![false; n];
    let mut line = vec![false; n];
    let mut pending: Vec<(u8, usize, usize)> = Vec::new();
    let mut arrival = 0usize;
    let mut push = |pending: &mut Vec<(u8, usize, usize)>, p: usize| {
        pending.push((img[p], arrival, p));
        arrival += 1;
    };

    for p in 0..n {
        if label[p] != 0 {
            for q in n4(w, h, p) {
                if label[q] == 0 && !queued[q] {
                    queued[q] = true;
                    push(&mut pending, q);
                }
            }
        }
    }
    while !pending.is_empty() {
        let k = (0..pending.len())
            .min_by_key(|&k| (pending[k].0, pending[k].1))
            .unwrap();
        let (_, _, p) = pending.remove(k);
        let around: BTreeSet<u32> = n4(w, h, p).into_iter().map(|q| label[q]).filter(|&l| l != 0).collect();
        assert!(!around.is_empty());
        if around.len() > 1 {
            line[p] = true;
            continue;
        }
        label[p] = *around.iter().next().unwrap();
        for q in n4(w, h, p) {
            if label[q] == 0 && !queued[q] {
                queued[q] = true;
                push(&mut pending, q);
            }
        }
    }

    let unreached: Vec<bool> = (0..n).map(|p| label[p] == 0 && !line[p]).collect();
    let pockets = oracle_components(&unreached, w, h);
    let base = ids.len() as u32;
    for p in 0..n {
        if pockets[p] != 0 {
            label[p] = base + pockets[p];
        }
    }
    label
}

/// All-pairs IoU: for every reference shape and every predicted shape, count
/// the pixel intersection and union directly.
pub fn oracle_matches(reference: &[u32], prediction: &[u32]) -> Vec<(u32, u32, f64)> {
    let refs: BTreeSet<u32> = reference.iter().copied().filter(|&l| l != 0).collect();
    let preds: BTreeSet<u32> = prediction.iter().copied().filter(|&l| l != 0).collect();
    let mut out = Vec::new();
    for &r in &refs {
        for &p in &preds {
            let mut inter = 0u64;
            let mut union = 0u64;
            for (&a, &b) in reference.iter().zip(prediction) {
                let (in_r, in_p) = (a == r, b == p);
                inter += (in_r && in_p) as u64;
                union += (in_r || in_p) as u64;
            }
            let iou = inter as f64 / union as f64;
            if iou > 0.5 {
                out.push((r, p, iou));
            }
        }
    }
    out
}

/// Best IoU of every shape of `subject` against any shape of `other`.
pub fn oracle_best_iou(subject: &[u32], other: &[u32]) -> BTreeMap<u32, f64> {
    let subjects: BTreeSet<u32> = subject.iter().copied().filter(|&l| l != 0).collect();
    let others: BTreeSet<u32> = other.iter().copied().filter(|&l| l != 0).collect();
    subjects
        .iter()
        .map(|&s| {
            let best = others
                .iter()
                .map(|&o| {
                    let inter = subject.iter().zip(other).filter(|(&a, &b)| a == s && b == o).count();
                    let union = subject.iter().zip(other).filter(|(&a, &b)| a == s || b == o).count();
                    inter as f64 / union as f64
                })
                .fold(0.0, f64::max);
            (s, best)
        })
        .collect()
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Violations {
    pub not_closed: usize,
    pub not_dense: usize,
    pub disconnected: usize,
    pub removable_lines: usize,
    pub mask_mismatch: usize,
}

impl Violations {
    pub fn total(&self) -> usize {
        self.not_closed + self.not_dense + self.disconnected + self.removable_lines + self.mask_mismatch
    }
}

/// Checks the partition invariants of a segmentation (4-adjacency).
pub fn partition_violations(labels: &LabelMap, region_count: usize, line_mask: &BinaryImage) -> Violations {
    let (w, h) = labels.dimensions();
    let l = labels.as_slice();
    let mut v = Violations::default();

    for (i, (&lab, &line)) in l.iter().zip(line_mask.as_slice()).enumerate() {
        if (lab == 0) != line {
            v.mask_mismatch += 1;
        }
        if lab == 0 {
            let around: BTreeSet<u32> = n4(w, h, i).into_iter().map(|q| l[q]).filter(|&x| x != 0).collect();
            if around.len() < 2 {
                v.removable_lines += 1;
            }
        } else {
            for q in n4(w, h, i) {
                if q > i && l[q] != 0 && l[q] != lab {
                    v.not_closed += 1;
                }
            }
        }
    }

    let used: BTreeSet<u32> = l.iter().copied().filter(|&x| x != 0).collect();
    let expected: BTreeSet<u32> = (1..=region_count as u32).collect();
    if used != expected {
        v.not_dense += 1;
    }

    // Each label must form a single 4-component.
    let nonzero: Vec<bool> = l.iter().map(|&x| x != 0).collect();
    let comps = component_ranks(&nonzero, w, h, |a, b| l[a] == l[b]);
    let mut comps_per_label: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for i in 0..l.len() {
        if l[i] != 0 {
            comps_per_label.entry(l[i]).or_default().insert(comps[i]);
        }
    }
    v.disconnected = comps_per_label.values().filter(|c| c.len() > 1).count();
    v
}

pub fn random_gray(rng: &mut StdRng, w: usize, h: usize, levels: u8) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen_range(0..levels)).unwrap()
}

/// A random partition of a `w × h` grid: Voronoi cells of random sites,
/// optionally with a sprinkling of unlabelled pixels.
pub fn random_partition(rng: &mut StdRng, w: usize, h: usize, sites: usize, holes: f64) -> LabelMap {
    let pts: Vec<(i64, i64)> = (0..sites)
        .map(|_| (rng.gen_range(0..w as i64), rng.gen_range(0..h as i64)))
        .collect();
    LabelMap::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        (0..sites)
            .min_by_key(|&k| (pts[k].0 - x).pow(2) + (pts[k].1 - y).pow(2))
            .unwrap() as u32
            + 1
    })
    .map(|lm| {
        let data: Vec<u32> = lm
            .as_slice()
            .iter()
            .map(|&l| if rng.gen_bool(holes) { 0 } else { l })
            .collect();
        LabelMap::new(w, h, data).unwrap()
    })
    .unwrap()
}

/// A map-like EPM: dark background noise with bright random strokes, slightly
/// blurred, occasionally with gaps.
pub fn synthetic_epm(rng: &mut StdRng, w: usize, h: usize) -> GrayImage {
    let mut canvas: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0.0..40.0)).collect();
    let strokes = rng.gen_range(3..10);
    for _ in 0..strokes {
        let (mut x, mut y) = (rng.gen_range(0..w) as f64, rng.gen_range(0..h) as f64);
        let horizontal = rng.gen_bool(0.5);
        let strength = rng.gen_range(120.0..255.0);
        let len = rng.gen_range(w / 4..w);
        for _ in 0..len {
            if rng.gen_bool(0.05) {
                // gap in the stroke
            } else {
                let (xi, yi) = (x as usize, y as usize);
                if xi < w && yi < h {
                    canvas[yi * w + xi] = canvas[yi * w + xi].max(strength);
                }
            }
            if horizontal {
                x += 1.0;
                y += rng.gen_range(-0.3..0.3);
            } else {
                y += 1.0;
                x += rng.gen_range(-0.3..0.3);
            }
            x = x.clamp(0.0, (w - 1) as f64);
            y = y.clamp(0.0, (h - 1) as f64);
        }
    }
    // 3×3 box blur
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                        sum += canvas[ny as usize * w + nx as usize];
                        count += 1.0;
                    }
                }
            }
            out[y * w + x] = (sum / count).round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage::new(w, h, out).unwrap()
}
