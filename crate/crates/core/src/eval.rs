//! Shape-level detection scoring.
//!
//! Reference and predicted label maps are both partitions (label 0 is not a
//! shape), so a pair with IoU strictly above 0.5 is necessarily the best
//! partner of each of its members: at most one such pair exists per shape.
//! Matching therefore reduces to collecting those pairs.
//!
//! Precision is `TP / (TP + FP)` and recall is `TP / (TP + FN)`. Ratios with a
//! zero denominator are 0.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::{LabelMap, RgbImage};

/// IoU thresholds reported in summary tables.
pub const SUMMARY_THRESHOLDS: [f64; 4] = [0.50, 0.80, 0.90, 0.95];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Match {
    pub ref_label: u32,
    pub pred_label: u32,
    pub intersection: u64,
    pub union: u64,
    /// `intersection / union`, always in `(0.5, 1]`.
    pub iou: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchSet {
    /// Sorted by reference label.
    pub matches: Vec<Match>,
    pub ref_count: usize,
    pub pred_count: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fn_ + self.fp)
    }
}

/// One step of the P/R/F1 step function.
///
/// A point at threshold `T` holds the values on `(T_prev, T]`. The first point
/// has `threshold == 0.5` and stands for the right limit `T → 0.5⁺`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl CurvePoint {
    fn new(threshold: f64, c: Counts) -> Self {
        CurvePoint {
            threshold,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QualityMode {
    /// Paint predicted shapes by their best IoU against the reference.
    Precision,
    /// Paint reference shapes by their best IoU against the prediction.
    Recall,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Background {
    #[default]
    White,
    Black,
}

impl Background {
    fn rgb(self) -> [u8; 3] {
        match self {
            Background::White => [255, 255, 255],
            Background::Black => [0, 0, 0],
        }
    }
}

/// Pixel areas of every shape in both maps and of every overlapping pair.
#[derive(Clone, Debug, Default)]
pub struct OverlapTable {
    pub ref_areas: BTreeMap<u32, u64>,
    pub pred_areas: BTreeMap<u32, u64>,
    pub intersections: HashMap<(u32, u32), u64>,
}

impl OverlapTable {
    pub fn build(reference: &LabelMap, prediction: &LabelMap) -> Result<Self> {
        reference.ensure_same_shape(prediction)?;
        let mut table = OverlapTable::default();
        for (&r, &p) in reference.as_slice().iter().zip(prediction.as_slice()) {
            if r != 0 {
                *table.ref_areas.entry(r).or_default() += 1;
            }
            if p != 0 {
                *table.pred_areas.entry(p).or_default() += 1;
            }
            if r != 0 && p != 0 {
                *table.intersections.entry((r, p)).or_default() += 1;
            }
        }
        Ok(table)
    }

    pub fn union_of(&self, r: u32, p: u32, intersection: u64) -> u64 {
        self.ref_areas[&r] + self.pred_areas[&p] - intersection
    }

    /// Best IoU of each shape of one side against any shape of the other.
    /// Shapes without overlap get 0.
    pub fn best_iou(&self, mode: QualityMode) -> HashMap<u32, f64> {
        let subjects = match mode {
            QualityMode::Precision => &self.pred_areas,
            QualityMode::Recall => &self.ref_areas,
        };
        let mut best: HashMap<u32, f64> = subjects.keys().map(|&l| (l, 0.0)).collect();
        for (&(r, p), &inter) in &self.intersections {
            let iou = inter as f64 / self.union_of(r, p, inter) as f64;
            let key = match mode {
                QualityMode::Precision => p,
                QualityMode::Recall => r,
            };
            let slot = best.get_mut(&key).unwrap();
            if iou > *slot {
                *slot = iou;
            }
        }
        best
    }
}

/// All (reference, prediction) pairs with IoU strictly above 0.5.
pub fn match_shapes(reference: &LabelMap, prediction: &LabelMap) -> Result<MatchSet> {
    let table = OverlapTable::build(reference, prediction)?;
    let mut matches: Vec<Match> = table
        .intersections
        .iter()
        .filter_map(|(&(r, p), &inter)| {
            let union = table.union_of(r, p, inter);
            (2 * inter > union).then(|| Match {
                ref_label: r,
                pred_label: p,
                intersection: inter,
                union,
                iou: inter as f64 / union as f64,
            })
        })
        .collect();
    matches.sort_by_key(|m| (m.ref_label, m.pred_label));
    Ok(MatchSet {
        matches,
        ref_count: table.ref_areas.len(),
        pred_count: table.pred_areas.len(),
    })
}

/// TP/FP/FN when a match needs IoU ≥ `t`, with `t` in `(0.5, 1]`.
pub fn counts_at(ms: &MatchSet, t: f64) -> Result<Counts> {
    if !(t > 0.5 && t <= 1.0) {
        return Err(Error::IouThresholdOutOfRange(t));
    }
    Ok(counts_unchecked(ms, t))
}

// Every match has IoU > 0.5, so `t = 0.5` yields the T → 0.5⁺ counts.
fn counts_unchecked(ms: &MatchSet, t: f64) -> Counts {
    let tp = ms.matches.iter().filter(|m| m.iou >= t).count();
    Counts {
        tp,
        fp: ms.pred_count - tp,
        fn_: ms.ref_count - tp,
    }
}

/// Exact step-function curve over `T ∈ (0.5, 1]`: one point for the limit at
/// 0.5, one per distinct match IoU, and one at 1.
pub fn pr_f1_curve(ms: &MatchSet) -> Vec<CurvePoint> {
    let mut ious: Vec<f64> = ms.matches.iter().map(|m| m.iou).collect();
    ious.sort_by(f64::total_cmp);
    ious.dedup();
    if ious.last() != Some(&1.0) {
        ious.push(1.0);
    }
    std::iter::once(0.5)
        .chain(ious)
        .map(|t| CurvePoint::new(t, counts_unchecked(ms, t)))
        .collect()
}

/// The curve sampled at `0.5 + k / steps` for `k = 1..=steps`.
pub fn sampled_curve(ms: &MatchSet, steps: usize) -> Vec<CurvePoint> {
    (1..=steps)
        .map(|k| {
            let t = (steps + k) as f64 / (2 * steps) as f64;
            CurvePoint::new(t, counts_unchecked(ms, t))
        })
        .collect()
}

/// Rows of the summary table, at [`SUMMARY_THRESHOLDS`].
pub fn summary(ms: &MatchSet) -> Vec<CurvePoint> {
    SUMMARY_THRESHOLDS
        .iter()
        .map(|&t| CurvePoint::new(t, counts_unchecked(ms, t)))
        .collect()
}

/// Integral of F1 over `(0.5, 1]`; lies in `[0, 0.5]`.
pub fn area_under_f1(curve: &[CurvePoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].threshold - w[0].threshold) * w[1].f1)
        .sum()
}

/// Harmonic mean of precision and recall.
pub fn f1_from_precision_recall(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Red → yellow on `[0, 0.5]`, yellow → green on `(0.5, 1]`.
pub fn iou_ramp(b: f64) -> [u8; 3] {
    let b = b.clamp(0.0, 1.0);
    if b <= 0.5 {
        [255, (510.0 * b).round() as u8, 0]
    } else {
        [(510.0 * (1.0 - b)).round() as u8, 255, 0]
    }
}

/// Paints every shape of one side with the ramp colour of its best IoU
/// against the other side. Label 0 gets the background colour.
pub fn quality_map(
    reference: &LabelMap,
    prediction: &LabelMap,
    mode: QualityMode,
    background: Background,
) -> Result<RgbImage> {
    let table = OverlapTable::build(reference, prediction)?;
    let best = table.best_iou(mode);
    let colors: HashMap<u32, [u8; 3]> = best.into_iter().map(|(l, b)| (l, iou_ramp(b))).collect();
    let subject = match mode {
        QualityMode::Precision => prediction,
        QualityMode::Recall => reference,
    };
    Ok(subject.map(|l| if *l == 0 { background.rgb() } else { colors[l] }))
}

/// Keeps the rows `[row_start, row_end)`, zeroes the rest and renumbers the
/// surviving labels `1..=K` in their original order.
pub fn mask_rows(lm: &LabelMap, row_start: usize, row_end: usize) -> Result<LabelMap> {
    if row_start >= row_end || row_end > lm.height() {
        return Err(Error::InvalidRowRange {
            start: row_start,
            end: row_end,
            height: lm.height(),
        });
    }
    let w = lm.width();
    let band = &lm.as_slice()[row_start * w..row_end * w];
    let mut present: Vec<u32> = band.iter().copied().filter(|&l| l != 0).collect();
    present.sort_unstable();
    present.dedup();
    let dense = |l: u32| present.binary_search(&l).map_or(0, |i| i as u32 + 1);

    let mut out = vec![0u32; lm.len()];
    for (o, &l) in out[row_start * w..row_end * w].iter_mut().zip(band) {
        if l != 0 {
            *o = dense(l);
        }
    }
    LabelMap::new(w, lm.height(), out)
}

/// Class-balancing weights for a weighted binary cross-entropy:
/// `α = λ·|Y−| / N` and `β = |Y+| / N` with `N = |Y+| + |Y−|`.
pub fn class_balance_weights(edge_count: u64, non_edge_count: u64, lambda: f64) -> Result<(f64, f64)> {
    let total = edge_count + non_edge_count;
    if total == 0 {
        return Err(Error::EmptyClassCounts);
    }
    let n = total as f64;
    Ok((lambda * non_edge_count as f64 / n, edge_count as f64 / n))
}

/// CSV with header `threshold,precision,recall,f1,tp,fp,fn`, six decimals.
pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("threshold,precision,recall,f1,tp,fp,fn\n");
    for p in points {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{},{},{}",
            p.threshold, p.precision, p.recall, p.f1, p.tp, p.fp, p.fn_
        )
        .unwrap();
    }
    out
}

/// Aligned plain-text table of summary rows.
pub fn format_summary(rows: &[CurvePoint], auc: f64) -> String {
    let mut out = format!(
        "{:>5}  {:>9}  {:>6}  {:>7}  {:>6}  {:>6}  {:>6}\n",
        "IoU", "Precision", "Recall", "F-score", "TP", "FP", "FN"
    );
    for r in rows {
        writeln!(
            out,
            "{:>5.2}  {:>9.2}  {:>6.2}  {:>7.2}  {:>6}  {:>6}  {:>6}",
            r.threshold, r.precision, r.recall, r.f1, r.tp, r.fp, r.fn_
        )
        .unwrap();
    }
    writeln!(out, "AUC-F1 {auc:.6}").unwrap();
    out
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
