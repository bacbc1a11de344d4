//! End-to-end stages behind the command-line tool.
//!
//! Segmentation and labelling always run on the full image; row bands are
//! applied afterwards, on the label maps, when scoring.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baseline::baseline_shapes;
use crate::error::{Error, Result};
use crate::eval::{
    area_under_f1, counts_at, curve_to_csv, format_summary, mask_rows, match_shapes, pr_f1_curve,
    quality_map, sampled_curve, summary, Background, CurvePoint, MatchSet, QualityMode,
};
use crate::groundtruth::{make_edge_gt, make_label_gt, split_rows, PolylineSet, SplitPlan, SplitSpec};
use crate::io::{read_graymap, write_colormap, write_graymap, write_labelmap};
use crate::morpho::{filter_epm_ordered, FilterOrder, FilterParams};
use crate::raster::{BinaryImage, Connectivity, GrayImage, LabelMap};
use crate::watershed::{segment_ordered, SegmentationResult};

/// `{prefix}{suffix}`, creating the parent directory if needed.
pub fn output_path(prefix: &Path, suffix: &str) -> Result<PathBuf> {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    let path = PathBuf::from(name);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Line pixels as 255 on a 0 background.
pub fn line_mask_image(mask: &BinaryImage) -> GrayImage {
    mask.map(|&on| if on { 255 } else { 0 })
}

/// Filters the EPM and writes the filtered graymap to `out`.
pub fn run_filter(
    epm_path: &Path,
    params: FilterParams,
    order: FilterOrder,
    conn: Connectivity,
    out: &Path,
) -> Result<GrayImage> {
    let epm = read_graymap(epm_path)?;
    let filtered = filter_epm_ordered(&epm, params, order, conn);
    write_graymap(&filtered, out)?;
    Ok(filtered)
}

/// Writes `{prefix}.slab`, `{prefix}_lines.pgm` and `{prefix}_stats.txt`.
pub fn run_watershed_pipeline(
    epm_path: &Path,
    params: FilterParams,
    order: FilterOrder,
    conn: Connectivity,
    out_prefix: &Path,
) -> Result<SegmentationResult> {
    let epm = read_graymap(epm_path)?;
    let result = segment_ordered(&epm, params, order, conn);
    write_labelmap(&result.labels, output_path(out_prefix, ".slab")?)?;
    write_graymap(&line_mask_image(&result.line_mask), output_path(out_prefix, "_lines.pgm")?)?;
    write_text(
        &output_path(out_prefix, "_stats.txt")?,
        &watershed_stats_line(&result),
    )?;
    Ok(result)
}

pub fn watershed_stats_line(result: &SegmentationResult) -> String {
    format!(
        "regions={} line_pixels={}\n",
        result.region_count,
        result.line_pixel_count()
    )
}

/// Writes the baseline label map to `{prefix}.slab`.
pub fn run_baseline(epm_path: &Path, threshold: u32, conn: Connectivity, out_prefix: &Path) -> Result<LabelMap> {
    let epm = read_graymap(epm_path)?;
    let labels = baseline_shapes(&epm, threshold, conn)?;
    write_labelmap(&labels, output_path(out_prefix, ".slab")?)?;
    Ok(labels)
}

/// Writes `{prefix}_edges.pgm` and `{prefix}_labels.slab`.
pub fn run_rasterize_gt(polyline_path: &Path, width: usize, height: usize, out_prefix: &Path) -> Result<LabelMap> {
    let text = fs::read_to_string(polyline_path).map_err(|e| Error::io(polyline_path, e))?;
    let ps = PolylineSet::parse(&text, width, height)?;
    let edges = make_edge_gt(&ps);
    let labels = make_label_gt(&edges);
    write_graymap(&line_mask_image(&edges), output_path(out_prefix, "_edges.pgm")?)?;
    write_labelmap(&labels, output_path(out_prefix, "_labels.slab")?)?;
    Ok(labels)
}

/// Cuts a graymap into the tiles of `spec`, named `tile_rRRRRR_cCCCCC.pgm`.
pub fn run_tiles(img_path: &Path, spec: &SplitSpec, out_dir: &Path) -> Result<SplitPlan> {
    let img = read_graymap(img_path)?;
    let plan = split_rows(img.width(), img.height(), spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for tile in &plan.tiles {
        let crop = img.crop(tile.col, tile.row, tile.width, tile.height)?;
        write_graymap(&crop, out_dir.join(tile.file_name()))?;
    }
    Ok(plan)
}

/// What a calibration maximises.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Objective {
    #[default]
    AreaUnderF1,
    /// F1 at a fixed IoU threshold in `(0.5, 1]`.
    F1At(f64),
}

impl Objective {
    pub fn score(&self, ms: &MatchSet) -> Result<f64> {
        match *self {
            Objective::AreaUnderF1 => Ok(area_under_f1(&pr_f1_curve(ms))),
            Objective::F1At(t) => Ok(counts_at(ms, t)?.f1()),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auc" {
            return Ok(Objective::AreaUnderF1);
        }
        let t = s
            .strip_prefix("f1@")
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("objective must be auc or f1@T, got {s:?}")))?;
        if !(t > 0.5 && t <= 1.0) {
            return Err(Error::IouThresholdOutOfRange(t));
        }
        Ok(Objective::F1At(t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridScore<P> {
    pub params: P,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult<P> {
    pub best: P,
    pub score: f64,
    /// Every grid point, in grid order.
    pub grid: Vec<GridScore<P>>,
}

pub fn default_watershed_grid() -> Vec<FilterParams> {
    let mut grid = Vec::new();
    for h in 1..=10u8 {
        for lambda in (50..=500).step_by(50) {
            grid.push(FilterParams::new(h, lambda));
        }
    }
    grid
}

pub fn default_threshold_grid() -> Vec<u32> {
    (1..=30).collect()
}

/// Scores a prediction against the reference inside a row band.
pub fn band_score(reference: &LabelMap, prediction: &LabelMap, band: &Range<usize>, objective: Objective) -> Result<f64> {
    let r = mask_rows(reference, band.start, band.end)?;
    let p = mask_rows(prediction, band.start, band.end)?;
    objective.score(&match_shapes(&r, &p)?)
}

/// Runs `arm` on every grid point (in parallel), scores each output inside
/// `band`, and returns the best point. Equal scores resolve to the smallest
/// parameters.
pub fn calibrate_with<P, F>(
    reference: &LabelMap,
    grid: &[P],
    band: &Range<usize>,
    objective: Objective,
    arm: F,
) -> Result<CalibrationResult<P>>
where
    P: Copy + Ord + Send + Sync,
    F: Fn(&P) -> Result<LabelMap> + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if band.start >= band.end || band.end > reference.height() {
        return Err(Error::InvalidRowRange {
            start: band.start,
            end: band.end,
            height: reference.height(),
        });
    }
    let masked_ref = mask_rows(reference, band.start, band.end)?;
    let scores = grid
        .par_iter()
        .map(|params| {
            let prediction = arm(params)?;
            let masked = mask_rows(&prediction, band.start, band.end)?;
            let score = objective.score(&match_shapes(&masked_ref, &masked)?)?;
            Ok(GridScore {
                params: *params,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = scores
        .iter()
        .reduce(|best, cand| {
            if cand.score > best.score || (cand.score == best.score && cand.params < best.params) {
                cand
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    Ok(CalibrationResult {
        best: best.params,
        score: best.score,
        grid: scores,
    })
}

pub fn calibrate_watershed(
    epm: &GrayImage,
    reference: &LabelMap,
    grid: &[FilterParams],
    band: &Range<usize>,
    objective: Objective,
    order: FilterOrder,
    conn: Connectivity,
) -> Result<CalibrationResult<FilterParams>> {
    epm.ensure_same_shape(reference)?;
    calibrate_with(reference, grid, band, objective, |&params| {
        Ok(segment_ordered(epm, params, order, conn).labels)
    })
}

pub fn calibrate_baseline(
    epm: &GrayImage,
    reference: &LabelMap,
    grid: &[u32],
    band: &Range<usize>,
    objective: Objective,
    conn: Connectivity,
) -> Result<CalibrationResult<u32>> {
    epm.ensure_same_shape(reference)?;
    calibrate_with(reference, grid, band, objective, |&t| baseline_shapes(epm, t, conn))
}

/// Scores of one prediction inside a row band.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub band: Range<usize>,
    pub matches: MatchSet,
    pub curve: Vec<CurvePoint>,
    pub summary: Vec<CurvePoint>,
    pub auc: f64,
    pub reference: LabelMap,
    pub prediction: LabelMap,
}

impl EvaluationReport {
    pub fn has_shapes(&self) -> bool {
        self.matches.ref_count > 0 && self.matches.pred_count > 0
    }

    pub fn table(&self) -> String {
        format_summary(&self.summary, self.auc)
    }
}

/// Masks both maps to `band` and scores the prediction.
pub fn evaluate_maps(reference: &LabelMap, prediction: &LabelMap, band: Range<usize>) -> Result<EvaluationReport> {
    reference.ensure_same_shape(prediction)?;
    let reference = mask_rows(reference, band.start, band.end)?;
    let prediction = mask_rows(prediction, band.start, band.end)?;
    let matches = match_shapes(&reference, &prediction)?;
    let curve = pr_f1_curve(&matches);
    let auc = area_under_f1(&curve);
    Ok(EvaluationReport {
        band,
        summary: summary(&matches),
        matches,
        curve,
        auc,
        reference,
        prediction,
    })
}

/// Writes the exact and sampled curves, the summary table (CSV and text) and
/// both quality maps under `out_prefix`.
pub fn write_evaluation(report: &EvaluationReport, out_prefix: &Path, background: Background) -> Result<()> {
    write_text(&output_path(out_prefix, "_curve.csv")?, &curve_to_csv(&report.curve))?;
    write_text(
        &output_path(out_prefix, "_curve_sampled.csv")?,
        &curve_to_csv(&sampled_curve(&report.matches, 50)),
    )?;
    write_text(&output_path(out_prefix, "_summary.csv")?, &curve_to_csv(&report.summary))?;
    write_text(&output_path(out_prefix, "_summary.txt")?, &report.table())?;
    write_quality_maps(&report.reference, &report.prediction, out_prefix, background)
}

/// Writes `{prefix}_precision.ppm` and `{prefix}_recall.ppm`.
pub fn write_quality_maps(
    reference: &LabelMap,
    prediction: &LabelMap,
    out_prefix: &Path,
    background: Background,
) -> Result<()> {
    let precision = quality_map(reference, prediction, QualityMode::Precision, background)?;
    let recall = quality_map(reference, prediction, QualityMode::Recall, background)?;
    write_colormap(&precision, output_path(out_prefix, "_precision.ppm")?)?;
    write_colormap(&recall, output_path(out_prefix, "_recall.ppm")?)
}
