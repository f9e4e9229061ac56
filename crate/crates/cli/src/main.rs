//! `lgnkit`: prepare data, train, compile, simulate, estimate, search and
//! report on logic gate networks.

mod artifacts;
mod grid;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lgnkit::compile::{compile, discretize, emit_verilog, build_netlist, Netlist, PipelinePlan};
use lgnkit::data::{encode_images, load_cache_file, load_cifar10_files, load_idx_files, write_cache, DatasetName, DatasetSpec, EncodedDataset};
use lgnkit::estimate::{estimate_netlist, estimate_spec, CalibrationParams};
use lgnkit::netsim::{simulate_many, simulate_pipelined_with, write_trace};
use lgnkit::report::{cap_comparison, GridReport, to_csv, Variant, correlation_matrix, DEFAULT_COLUMNS};
use lgnkit::search::{search, Budget, SearchConfig, SearchStatus};
use lgnkit::train::{train, ModelCheckpoint, TrainConfig};
use lgnkit::{ArchitectureSpec, Scalar};

use artifacts::{read_json, read_text, write_atomic, write_json};

/// Exit status when a search finds no feasible candidate.
const EXIT_NONE_FEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "lgnkit", version, about = "Logic gate network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode an image dataset into a packed bit cache.
    Encode(EncodeArgs),
    /// Train a network with k-fold cross-validation.
    Train(TrainArgs),
    /// Discretize a trained model and lower it to a netlist and Verilog.
    Compile(CompileArgs),
    /// Run a netlist over an encoded dataset.
    Simulate(SimulateArgs),
    /// Estimate LUTs, flip-flops, cycles and power.
    Estimate(EstimateArgs),
    /// Search for architectures that fit a resource budget.
    Search(SearchArgs),
    /// Estimate (and optionally train) a grid of architectures, resumably.
    Grid(grid::GridArgs),
    /// Cap comparisons and correlations from a grid report.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct OutDir {
    /// Output directory (defaults to $LGNKIT_OUT_DIR, then the current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl OutDir {
    fn path(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os("LGNKIT_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    fn file(&self, name: &str) -> PathBuf {
        self.path().join(name)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Mnist,
    FashionMnist,
    Cifar10,
}

impl From<DatasetArg> for DatasetName {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Mnist => DatasetName::Mnist,
            DatasetArg::FashionMnist => DatasetName::FashionMnist,
            DatasetArg::Cifar10 => DatasetName::Cifar10,
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long, value_enum, default_value = "mnist")]
    dataset: DatasetArg,
    /// IDX image file (MNIST, Fashion-MNIST).
    #[arg(long, required_unless_present = "cifar")]
    images: Option<PathBuf>,
    /// IDX label file (MNIST, Fashion-MNIST).
    #[arg(long, requires = "images")]
    labels: Option<PathBuf>,
    /// CIFAR-10 binary batch files.
    #[arg(long, num_args = 1.., conflicts_with = "images")]
    cifar: Vec<PathBuf>,
    /// Bits per pixel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=8))]
    bits: u32,
    /// Keep only the first N samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Output file (defaults to <out-dir>/<dataset>-b<bits>.bin).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    out_dir: OutDir,
}

#[derive(Args)]
struct SpecArgs {
    /// Architecture JSON file.
    #[arg(long, conflicts_with_all = ["width", "depth"])]
    spec: Option<PathBuf>,
    /// Layer width L_W.
    #[arg(long, requires = "depth")]
    width: Option<usize>,
    /// Number of baseline layers L_D.
    #[arg(long, requires = "width")]
    depth: Option<usize>,
    /// Bits per pixel the data was encoded with.
    #[arg(long, default_value_t = 1)]
    bits: u32,
    /// Front cap width.
    #[arg(long)]
    front: Option<usize>,
    /// End cap fraction.
    #[arg(long)]
    end: Option<f64>,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 0)]
    wiring_seed: u64,
}

impl SpecArgs {
    /// The architecture; `input_bits` is used when it is built from flags.
    fn resolve(&self, input_bits: usize) -> Result<ArchitectureSpec> {
        let spec = match &self.spec {
            Some(p) => read_json::<ArchitectureSpec>(p)?,
            None => {
                let (Some(w), Some(d)) = (self.width, self.depth) else {
                    bail!("pass --spec or both --width and --depth");
                };
                ArchitectureSpec {
                    bit_depth: self.bits,
                    layer_width: w,
                    depth: d,
                    front_width: self.front,
                    end_fraction: self.end,
                    class_count: self.classes,
                    wiring_seed: self.wiring_seed,
                    input_bits,
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Args)]
struct TrainArgs {
    /// Encoded dataset cache.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    /// Training configuration JSON (unknown keys are rejected).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Train only the first N folds.
    #[arg(long)]
    max_fold_runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "f32")]
    precision: Precision,
    #[command(flatten)]
    out_dir: OutDir,
}

#[derive(Args)]
struct CompileArgs {
    /// Model checkpoint from `train`.
    #[arg(long)]
    model: PathBuf,
    /// Pipeline plan JSON.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value = "lgn_top")]
    module_name: String,
    /// Skip constant propagation and dead-logic removal.
    #[arg(long)]
    no_prune: bool,
    #[command(flatten)]
    out_dir: OutDir,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Encoded dataset cache.
    #[arg(long)]
    data: PathBuf,
    /// Simulate only the first N samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Model checkpoint to cross-check against.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write a cycle-by-cycle trace of the first N samples.
    #[arg(long)]
    trace: Option<usize>,
    #[command(flatten)]
    out_dir: OutDir,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, conflicts_with = "netlist", required_unless_present = "netlist")]
    spec: Option<PathBuf>,
    #[arg(long)]
    netlist: Option<PathBuf>,
    /// Calibration JSON.
    #[arg(long)]
    cal: Option<PathBuf>,
    #[arg(long)]
    plan: Option<PathBuf>,
    #[command(flatten)]
    out_dir: OutDir,
}

#[derive(Args)]
struct SearchArgs {
    /// Budget JSON.
    #[arg(long)]
    budget: PathBuf,
    /// Search configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Penalty per gate of L_end.
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    out_dir: OutDir,
}

#[derive(Args)]
struct ReportArgs {
    /// Grid report from `grid`.
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    out_dir: OutDir,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Search(a) => return cmd_search(a),
        Command::Encode(a) => cmd_encode(a)?,
        Command::Train(a) => cmd_train(a)?,
        Command::Compile(a) => cmd_compile(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Estimate(a) => cmd_estimate(a)?,
        Command::Grid(a) => grid::cmd_grid(a)?,
        Command::Report(a) => cmd_report(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_or_default<T: Default + serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn load_plan(path: Option<&Path>) -> Result<PipelinePlan> {
    let plan: PipelinePlan = load_or_default(path)?;
    plan.validate()?;
    Ok(plan)
}

fn load_cal(path: Option<&Path>) -> Result<CalibrationParams> {
    match path {
        Some(p) => Ok(CalibrationParams::from_json(&read_text(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Ok(CalibrationParams::default()),
    }
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let name: DatasetName = a.dataset.into();
    let raw = if !a.cifar.is_empty() {
        let paths: Vec<&Path> = a.cifar.iter().map(PathBuf::as_path).collect();
        load_cifar10_files(&paths)?
    } else {
        let (Some(images), Some(labels)) = (&a.images, &a.labels) else {
            bail!("--images and --labels are both required for IDX datasets");
        };
        load_idx_files(images, labels)?
    };
    let raw = match a.limit {
        Some(n) => raw.truncate(n),
        None => raw,
    };
    let ds = DatasetSpec::new(name, a.bits);
    if raw.pixel_count != ds.pixel_count {
        bail!("images have {} pixels, {:?} expects {}", raw.pixel_count, name, ds.pixel_count);
    }
    let enc = encode_images(&raw, a.bits, ds.class_count)?;
    let dataset = serde_json::to_value(name)?.as_str().unwrap_or("data").to_string();
    let out = a.out.unwrap_or_else(|| a.out_dir.file(&format!("{dataset}-b{}.bin", a.bits)));
    write_atomic(&out, &write_cache(&enc))?;
    println!("{} samples, {} bits each -> {}", enc.len(), enc.bit_count(), out.display());
    Ok(())
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = load_or_default(a.config.as_deref())?;
    if let Some(e) = a.epochs {
        cfg.max_epochs = e;
    }
    if let Some(lr) = a.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(f) = a.folds {
        cfg.folds = f;
    }
    if a.max_fold_runs.is_some() {
        cfg.max_fold_runs = a.max_fold_runs;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_training<T: Scalar>(spec: &ArchitectureSpec, data: &EncodedDataset, a: &TrainArgs, cfg: &TrainConfig) -> Result<()> {
    let result = train::<T>(spec, data, cfg)?;
    let summary = result.summary();
    write_json(&a.out_dir.file("model.json"), &ModelCheckpoint::from_network(&result.network))?;
    write_json(&a.out_dir.file("train-summary.json"), &summary)?;
    println!(
        "best fold {}: validation accuracy {:.4} ± {:.4}, test hard accuracy {}",
        summary.best_fold,
        summary.mean_val_accuracy,
        summary.std_val_accuracy,
        summary.test_hard_accuracy.map_or("n/a".into(), |x| format!("{x:.4}"))
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg = train_config(&a)?;
    let data = load_cache_file(&a.data)?;
    let spec = a.spec.resolve(data.bit_count())?;
    match a.precision {
        Precision::F32 => run_training::<f32>(&spec, &data, &a, &cfg),
        Precision::F64 => run_training::<f64>(&spec, &data, &a, &cfg),
    }
}

fn load_model(path: &Path) -> Result<lgnkit::SoftLgnF64> {
    let ck = ModelCheckpoint::from_json(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
    Ok(ck.into_network::<f64>()?)
}

fn cmd_compile(a: CompileArgs) -> Result<()> {
    let plan = load_plan(a.plan.as_deref())?;
    let net = load_model(&a.model)?;
    let hard = discretize(&net);
    let nl = if a.no_prune { build_netlist(&hard, &plan)? } else { compile(&hard, &plan)? };
    write_atomic(&a.out_dir.file("netlist.json"), nl.to_json()?.as_bytes())?;
    let v_path = a.out_dir.file(&format!("{}.v", a.module_name));
    write_atomic(&v_path, emit_verilog(&nl, &a.module_name).as_bytes())?;
    println!(
        "{} nodes, {} logic gates ({} before pruning), {} pipeline stages -> {}",
        nl.nodes.len(),
        nl.meta.gates_after_prune,
        nl.meta.gates_before_prune,
        nl.stage_count,
        v_path.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SimulationReport {
    samples: usize,
    accuracy: f64,
    latency_cycles: u32,
    /// Disagreements with the model's hard evaluation, when a model was given.
    model_mismatches: Option<usize>,
    predictions: Vec<usize>,
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let nl = Netlist::from_json(&read_text(&a.netlist)?).with_context(|| format!("in {}", a.netlist.display()))?;
    let mut data = load_cache_file(&a.data)?;
    if let Some(n) = a.limit {
        let keep: Vec<usize> = (0..n.min(data.len())).collect();
        data = data.subset(&keep);
    }
    if data.bit_count() != nl.input_bits {
        bail!("dataset has {} bits per sample, netlist expects {}", data.bit_count(), nl.input_bits);
    }
    let inputs: Vec<Vec<bool>> = (0..data.len()).map(|i| data.row_bits(i)).collect();
    let predictions = simulate_many(&nl, &inputs)?;
    let correct = predictions.iter().enumerate().filter(|(i, &p)| p == data.label(*i)).count();
    let model_mismatches = match &a.model {
        Some(m) => {
            let hard = discretize(&load_model(m)?);
            let expected = hard.predict_many(&inputs)?;
            Some(expected.iter().zip(&predictions).filter(|(x, y)| x != y).count())
        }
        None => None,
    };
    if let Some(n) = a.trace {
        let tr = simulate_pipelined_with(&nl, &inputs[..n.min(inputs.len())], true)?;
        write_atomic(&a.out_dir.file("trace.txt"), write_trace(&tr).as_bytes())?;
    }
    let report = SimulationReport {
        samples: data.len(),
        accuracy: if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 },
        latency_cycles: nl.stage_count,
        model_mismatches,
        predictions,
    };
    write_json(&a.out_dir.file("simulation.json"), &report)?;
    print!("{} samples, accuracy {:.4}", report.samples, report.accuracy);
    if let Some(m) = report.model_mismatches {
        print!(", {m} mismatches against the model");
    }
    println!();
    if report.model_mismatches.is_some_and(|m| m > 0) {
        bail!("netlist disagrees with the model");
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let cal = load_cal(a.cal.as_deref())?;
    let plan = load_plan(a.plan.as_deref())?;
    let est = match (&a.spec, &a.netlist) {
        (Some(s), _) => {
            let spec: ArchitectureSpec = read_json(s)?;
            estimate_spec(&spec, &cal, &plan)?
        }
        (None, Some(n)) => {
            let nl = Netlist::from_json(&read_text(n)?).with_context(|| format!("in {}", n.display()))?;
            estimate_netlist(&nl, &cal)?
        }
        (None, None) => bail!("pass --spec or --netlist"),
    };
    write_json(&a.out_dir.file("estimate.json"), &est)?;
    println!(
        "LUT {} (input {}, logic {}, sum {}, delta {}), FF {}, {} cycles, {:.3} W, fits one SLR: {}",
        est.lut_total, est.lut_input, est.lut_logic, est.lut_sum, est.lut_delta, est.ff_total, est.cycles, est.power_watts, est.fits_slr
    );
    Ok(())
}

fn cmd_search(a: SearchArgs) -> Result<ExitCode> {
    let budget: Budget = read_json(&a.budget)?;
    budget.validate()?;
    let mut cfg: SearchConfig = load_or_default(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    let out = search(&budget, &cfg)?;
    write_json(&a.out_dir.file("search.json"), &out)?;
    let rows: Vec<lgnkit::report::GridRow> = out
        .pareto
        .iter()
        .map(|c| lgnkit::report::GridRow::new(c.spec.clone(), c.estimate.clone()))
        .collect();
    write_atomic(&a.out_dir.file("search.csv"), to_csv(&rows).as_bytes())?;
    match out.status {
        SearchStatus::Found => {
            println!("{} evaluated, {} feasible samples, {} on the Pareto set", out.evaluated, out.feasible_count, out.pareto.len());
            Ok(ExitCode::SUCCESS)
        }
        SearchStatus::NoneFeasible => {
            eprintln!("no feasible candidate among {} evaluated; nearest misses:", out.evaluated);
            for m in &out.nearest_misses {
                eprintln!(
                    "  L_W={} L_D={} b={}: {}",
                    m.spec.layer_width,
                    m.spec.depth,
                    m.spec.bit_depth,
                    m.violations.join("; ")
                );
            }
            Ok(ExitCode::from(EXIT_NONE_FEASIBLE))
        }
    }
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let report = GridReport::from_json(&read_text(&a.grid)?).with_context(|| format!("in {}", a.grid.display()))?;
    let caps = cap_comparison(&report.rows)?;
    for s in &caps.unmatched {
        eprintln!(
            "warning: no baseline for L_W={} L_D={} b={} seed={}; excluded",
            s.layer_width, s.depth, s.bit_depth, s.wiring_seed
        );
    }
    let table = caps.to_table();
    write_atomic(&a.out_dir.file("caps.txt"), table.as_bytes())?;
    write_json(&a.out_dir.file("caps.json"), &caps)?;
    write_atomic(&a.out_dir.file("correlation.csv"), report.correlation.to_csv().as_bytes())?;
    let subset: Vec<_> = report
        .rows
        .iter()
        .filter(|r| matches!(r.variant, Variant::Baseline | Variant::End))
        .cloned()
        .collect();
    if !subset.is_empty() {
        let m = correlation_matrix(&subset, &DEFAULT_COLUMNS)?;
        write_atomic(&a.out_dir.file("correlation-baseline-end.csv"), m.to_csv().as_bytes())?;
    }
    print!("{table}");
    Ok(())
}
