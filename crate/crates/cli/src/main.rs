//! `morphoseg`: closed-shape extraction from edge probability maps.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use morphoseg::eval::Background;
use morphoseg::groundtruth::{Band, SplitSpec};
use morphoseg::io::{read_graymap, read_labelmap};
use morphoseg::pipeline::{
    calibrate_baseline, calibrate_watershed, default_threshold_grid, default_watershed_grid, evaluate_maps,
    output_path, run_baseline, run_filter, run_rasterize_gt, run_tiles, run_watershed_pipeline,
    watershed_stats_line, write_evaluation, write_quality_maps, CalibrationResult, Objective,
};
use morphoseg::{Connectivity, FilterOrder, FilterParams};

#[derive(Parser)]
#[command(name = "morphoseg", version, about = "Closed-shape extraction from edge probability maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    /// Area closing, then dynamic filtering.
    AreaFirst,
    /// Dynamic filtering, then area closing.
    DynamicFirst,
}

impl From<Order> for FilterOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::AreaFirst => FilterOrder::AreaThenDynamic,
            Order::DynamicFirst => FilterOrder::DynamicThenArea,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Arm {
    Watershed,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bg {
    White,
    Black,
}

impl From<Bg> for Background {
    fn from(b: Bg) -> Self {
        match b {
            Bg::White => Background::White,
            Bg::Black => Background::Black,
        }
    }
}

#[derive(clap::Args)]
struct FilterArgs {
    /// Dynamic threshold h.
    #[arg(long = "h", default_value_t = 0)]
    h: u8,
    /// Minimum basin area λ in pixels.
    #[arg(long = "lambda", default_value_t = 0)]
    lambda: usize,
    #[arg(long, value_enum, default_value = "area-first")]
    order: Order,
    #[arg(long, default_value = "4", value_parser = parse_conn)]
    conn: Connectivity,
}

impl FilterArgs {
    fn params(&self) -> FilterParams {
        FilterParams::new(self.h, self.lambda)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Area closing and dynamic filtering of an EPM; writes PREFIX.pgm.
    Filter {
        epm: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filtered watershed; writes PREFIX.slab, PREFIX_lines.pgm, PREFIX_stats.txt.
    Watershed {
        epm: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Threshold and connected components; writes PREFIX.slab.
    Baseline {
        epm: PathBuf,
        #[arg(long, default_value_t = 9)]
        threshold: u32,
        #[arg(long, default_value = "4", value_parser = parse_conn)]
        conn: Connectivity,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rasterizes polylines; writes PREFIX_edges.pgm and PREFIX_labels.slab.
    RasterizeGt {
        polylines: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search on a validation row band.
    Calibrate {
        epm: PathBuf,
        reference: PathBuf,
        #[arg(long, value_enum, default_value = "watershed")]
        arm: Arm,
        #[arg(long, default_value = "4000:5000", value_parser = parse_range)]
        rows: Range<usize>,
        /// `auc` or `f1@T` with T in (0.5, 1].
        #[arg(long, default_value = "auc", value_parser = parse_objective)]
        objective: Objective,
        /// Dynamic grid as START:END (inclusive) or START:END:STEP.
        #[arg(long, value_parser = parse_grid)]
        h_grid: Option<Grid>,
        #[arg(long, value_parser = parse_grid)]
        lambda_grid: Option<Grid>,
        #[arg(long, value_parser = parse_grid)]
        threshold_grid: Option<Grid>,
        #[arg(long, value_enum, default_value = "area-first")]
        order: Order,
        #[arg(long, default_value = "4", value_parser = parse_conn)]
        conn: Connectivity,
        /// Writes PREFIX_grid.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scores a prediction on a row band; writes curves, summary and quality maps.
    Evaluate {
        reference: PathBuf,
        prediction: PathBuf,
        #[arg(long, default_value = "5000:6500", value_parser = parse_range)]
        rows: Range<usize>,
        #[arg(long, value_enum, default_value = "white")]
        background: Bg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes PREFIX_precision.ppm and PREFIX_recall.ppm.
    RenderMaps {
        reference: PathBuf,
        prediction: PathBuf,
        #[arg(long, default_value = "5000:6500", value_parser = parse_range)]
        rows: Range<usize>,
        #[arg(long, value_enum, default_value = "white")]
        background: Bg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cuts a graymap into the tiles of each row band.
    Tiles {
        image: PathBuf,
        #[arg(long, default_value = "0:4000", value_parser = parse_range)]
        train: Range<usize>,
        #[arg(long, default_value = "4000:5000", value_parser = parse_range)]
        val: Range<usize>,
        #[arg(long, default_value = "5000:6500", value_parser = parse_range)]
        test: Range<usize>,
        #[arg(long, default_value_t = 500)]
        tile: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_conn(s: &str) -> Result<Connectivity, String> {
    s.parse().map_err(|e: morphoseg::Error| e.to_string())
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse().map_err(|e: morphoseg::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected START:END, got {s:?}"))?;
    let start: usize = a.parse().map_err(|_| format!("bad row start {a:?}"))?;
    let end: usize = b.parse().map_err(|_| format!("bad row end {b:?}"))?;
    if start >= end {
        return Err(format!("empty row range {start}:{end}"));
    }
    Ok(start..end)
}

/// Integer grid values from `START:END[:STEP]`, inclusive.
#[derive(Clone, Debug)]
struct Grid(Vec<usize>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.parse().map_err(|_| format!("bad grid value {p:?} in {s:?}")))
        .collect::<Result<_, _>>()?;
    let (start, end, step) = match parts[..] {
        [v] => (v, v, 1),
        [a, b] => (a, b, 1),
        [a, b, c] if c > 0 => (a, b, c),
        _ => return Err(format!("expected START:END[:STEP], got {s:?}")),
    };
    if start > end {
        return Err(format!("empty grid {s:?}"));
    }
    Ok(Grid((start..=end).step_by(step).collect()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Filter { epm, filter, out } => {
            let path = output_path(&out, ".pgm")?;
            run_filter(&epm, filter.params(), filter.order.into(), filter.conn, &path).context("filter")?;
        }
        Command::Watershed { epm, filter, out } => {
            let res = run_watershed_pipeline(&epm, filter.params(), filter.order.into(), filter.conn, &out)
                .context("watershed")?;
            print!("{}", watershed_stats_line(&res));
        }
        Command::Baseline { epm, threshold, conn, out } => {
            let labels = run_baseline(&epm, threshold, conn, &out).context("baseline")?;
            println!("shapes={}", labels.as_slice().iter().copied().max().unwrap_or(0));
        }
        Command::RasterizeGt { polylines, width, height, out } => {
            let labels = run_rasterize_gt(&polylines, width, height, &out).context("rasterize-gt")?;
            println!("shapes={}", labels.as_slice().iter().copied().max().unwrap_or(0));
        }
        Command::Calibrate {
            epm,
            reference,
            arm,
            rows,
            objective,
            h_grid,
            lambda_grid,
            threshold_grid,
            order,
            conn,
            out,
        } => {
            let epm = read_graymap(&epm).context("calibrate")?;
            let reference = read_labelmap(&reference).context("calibrate")?;
            let csv = match arm {
                Arm::Watershed => {
                    let grid = watershed_grid(h_grid, lambda_grid)?;
                    let res = calibrate_watershed(&epm, &reference, &grid, &rows, objective, order.into(), conn)
                        .context("calibrate")?;
                    println!("best h={} lambda={} score={:.6}", res.best.h, res.best.lambda_area, res.score);
                    grid_csv("h,lambda", &res, |p| format!("{},{}", p.h, p.lambda_area))
                }
                Arm::Baseline => {
                    let grid = match threshold_grid {
                        Some(Grid(g)) => g.into_iter().map(|t| t as u32).collect(),
                        None => default_threshold_grid(),
                    };
                    let res = calibrate_baseline(&epm, &reference, &grid, &rows, objective, conn)
                        .context("calibrate")?;
                    println!("best threshold={} score={:.6}", res.best, res.score);
                    grid_csv("threshold", &res, |t| t.to_string())
                }
            };
            if let Some(out) = out {
                let path = output_path(&out, "_grid.csv")?;
                fs::write(&path, csv).with_context(|| format!("calibrate: writing {}", path.display()))?;
            }
        }
        Command::Evaluate { reference, prediction, rows, background, out } => {
            let (r, p) = read_pair(&reference, &prediction, "evaluate")?;
            let report = evaluate_maps(&r, &p, rows).context("evaluate")?;
            write_evaluation(&report, &out, background.into()).context("evaluate")?;
            print!("{}", report.table());
            if !report.has_shapes() {
                eprintln!("warning: no shapes in the evaluated band");
                return Ok(ExitCode::from(1));
            }
        }
        Command::RenderMaps { reference, prediction, rows, background, out } => {
            let (r, p) = read_pair(&reference, &prediction, "render-maps")?;
            let report = evaluate_maps(&r, &p, rows).context("render-maps")?;
            write_quality_maps(&report.reference, &report.prediction, &out, background.into())
                .context("render-maps")?;
        }
        Command::Tiles { image, train, val, test, tile, out } => {
            let spec = SplitSpec { train, validation: val, test, tile_size: tile };
            let plan = run_tiles(&image, &spec, &out).context("tiles")?;
            for band in [Band::Train, Band::Validation, Band::Test] {
                let tiles: Vec<_> = plan.tiles_in(band).collect();
                let full = tiles.iter().filter(|t| t.is_full(tile)).count();
                println!("{} tiles={} full={}", band.name(), tiles.len(), full);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_pair(
    reference: &Path,
    prediction: &Path,
    stage: &str,
) -> Result<(morphoseg::LabelMap, morphoseg::LabelMap)> {
    let r = read_labelmap(reference).with_context(|| stage.to_owned())?;
    let p = read_labelmap(prediction).with_context(|| stage.to_owned())?;
    Ok((r, p))
}

fn watershed_grid(h_grid: Option<Grid>, lambda_grid: Option<Grid>) -> Result<Vec<FilterParams>> {
    if h_grid.is_none() && lambda_grid.is_none() {
        return Ok(default_watershed_grid());
    }
    let hs = h_grid.map_or_else(|| (1..=10).collect(), |g| g.0);
    let lambdas = lambda_grid.map_or_else(|| (50..=500).step_by(50).collect(), |g| g.0);
    let mut grid = Vec::with_capacity(hs.len() * lambdas.len());
    for &h in &hs {
        let Ok(h) = u8::try_from(h) else {
            bail!("calibrate: h {h} exceeds 255");
        };
        for &lambda in &lambdas {
            grid.push(FilterParams::new(h, lambda));
        }
    }
    Ok(grid)
}

fn grid_csv<P>(header: &str, res: &CalibrationResult<P>, fmt: impl Fn(&P) -> String) -> String {
    let mut out = format!("{header},score\n");
    for g in &res.grid {
        writeln!(out, "{},{:.6}", fmt(&g.params), g.score).unwrap();
    }
    out
}
