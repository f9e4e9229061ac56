//! `lgnkit grid`: evaluate a set of architectures, one row file per
//! architecture, skipping rows already on disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use lgnkit::compile::PipelinePlan;
use lgnkit::data::{encode_images, load_idx_files, EncodedDataset, RawImages};
use lgnkit::estimate::{estimate_spec, CalibrationParams};
use lgnkit::report::{standard_grid, to_csv, GridReport, GridRow, DEFAULT_COLUMNS};
use lgnkit::train::{train, TrainConfig};
use lgnkit::ArchitectureSpec;

use crate::artifacts::{content_hash, read_json, write_atomic, write_json};
use crate::{load_cal, load_or_default, load_plan, OutDir};

#[derive(Args)]
pub struct GridArgs {
    /// Use the standard 1472-point grid.
    #[arg(long, conflicts_with = "specs", required_unless_present = "specs")]
    table1: bool,
    /// JSON list of architectures instead of the standard grid.
    #[arg(long)]
    specs: Option<PathBuf>,
    /// Pixels per sample for the standard grid.
    #[arg(long, default_value_t = 784)]
    pixels: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long)]
    cal: Option<PathBuf>,
    #[arg(long)]
    plan: Option<PathBuf>,
    /// IDX images to train each row on (encoded at the row's bit depth).
    #[arg(long, requires = "train_labels")]
    train_images: Option<PathBuf>,
    #[arg(long, requires = "train_images")]
    train_labels: Option<PathBuf>,
    /// Training configuration JSON.
    #[arg(long)]
    train_config: Option<PathBuf>,
    /// Use only the first N training samples.
    #[arg(long)]
    train_limit: Option<usize>,
    /// Only train rows with at most this many gates; larger rows are estimated only.
    #[arg(long)]
    max_train_gates: Option<usize>,
    #[command(flatten)]
    out_dir: OutDir,
}

/// Everything a row's content depends on.
#[derive(Serialize)]
struct RowKey<'a> {
    spec: &'a ArchitectureSpec,
    cal: &'a CalibrationParams,
    plan: &'a PipelinePlan,
    train: Option<&'a TrainConfig>,
    data: Option<String>,
}

struct Training {
    raw: RawImages,
    cfg: TrainConfig,
    tag: String,
    max_gates: usize,
    encoded: Mutex<BTreeMap<u32, std::sync::Arc<EncodedDataset>>>,
}

impl Training {
    fn dataset(&self, b: u32, classes: usize) -> Result<std::sync::Arc<EncodedDataset>> {
        let mut cache = self.encoded.lock().unwrap();
        if let Some(d) = cache.get(&b) {
            return Ok(d.clone());
        }
        let d = std::sync::Arc::new(encode_images(&self.raw, b, classes)?);
        cache.insert(b, d.clone());
        Ok(d)
    }
}

fn eval_row(spec: &ArchitectureSpec, cal: &CalibrationParams, plan: &PipelinePlan, training: Option<&Training>) -> Result<GridRow> {
    let mut row = GridRow::new(spec.clone(), estimate_spec(spec, cal, plan)?);
    if let Some(t) = training {
        let data = t.dataset(spec.bit_depth, spec.class_count)?;
        let result = train::<f32>(spec, &data, &t.cfg)?;
        row.accuracy = result.test_hard_accuracy;
    }
    Ok(row)
}

pub fn cmd_grid(a: GridArgs) -> Result<()> {
    let cal = load_cal(a.cal.as_deref())?;
    let plan = load_plan(a.plan.as_deref())?;
    let specs: Vec<ArchitectureSpec> = match &a.specs {
        Some(p) => read_json(p)?,
        None => standard_grid(a.pixels, a.classes),
    };
    if specs.is_empty() {
        bail!("the grid is empty");
    }
    for s in &specs {
        s.validate()?;
    }
    let training = match (&a.train_images, &a.train_labels) {
        (Some(i), Some(l)) => {
            let raw = load_idx_files(i, l)?;
            let raw = match a.train_limit {
                Some(n) => raw.truncate(n),
                None => raw,
            };
            let cfg: TrainConfig = load_or_default(a.train_config.as_deref())?;
            cfg.validate()?;
            Some(Training {
                tag: format!("{}|{}|{}", i.display(), l.display(), raw.len()),
                raw,
                cfg,
                max_gates: a.max_train_gates.unwrap_or(usize::MAX),
                encoded: Mutex::new(BTreeMap::new()),
            })
        }
        _ => None,
    };
    let rows_dir = a.out_dir.file("rows");
    std::fs::create_dir_all(&rows_dir).with_context(|| format!("creating {}", rows_dir.display()))?;
    let reused = AtomicUsize::new(0);
    let rows: Vec<GridRow> = specs
        .par_iter()
        .map(|spec| {
            let t = training.as_ref().filter(|t| spec.total_gates() <= t.max_gates);
            let key = RowKey {
                spec,
                cal: &cal,
                plan: &plan,
                train: t.map(|t| &t.cfg),
                data: t.map(|t| t.tag.clone()),
            };
            let path = rows_dir.join(format!("{}.json", content_hash(&key)?));
            if let Some(row) = read_existing(&path) {
                reused.fetch_add(1, Ordering::Relaxed);
                return Ok(row);
            }
            let row = eval_row(spec, &cal, &plan, t)?;
            write_json(&path, &row)?;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut columns: Vec<&str> = DEFAULT_COLUMNS.to_vec();
    if rows.iter().all(|r| r.accuracy.is_some()) {
        columns.push("accuracy");
    }
    let report = GridReport::new(rows, &columns)?;
    write_atomic(&a.out_dir.file("grid.json"), report.to_json()?.as_bytes())?;
    write_atomic(&a.out_dir.file("grid.csv"), to_csv(&report.rows).as_bytes())?;
    let reused = reused.into_inner();
    println!(
        "{} rows ({} computed, {} reused) -> {}",
        report.rows.len(),
        report.rows.len() - reused,
        reused,
        a.out_dir.file("grid.csv").display()
    );
    Ok(())
}

/// A previously written row, if it exists and parses.
fn read_existing(path: &Path) -> Option<GridRow> {
    if !path.exists() {
        return None;
    }
    read_json(path).ok()
}
