//! Grid reports: the architecture grid, correlation matrices and cap
//! comparisons.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureSpec;
use crate::compile::PipelinePlan;
use crate::error::{Error, Result};
use crate::estimate::{estimate_spec, CalibrationParams, ResourceEstimate};

/// Pearson correlation coefficient. Errors on mismatched lengths, fewer than
/// two points or a constant series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::domain("correlation needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::domain("correlation is undefined for a constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    Front,
    End,
    Dual,
}

impl Variant {
    pub fn of(spec: &ArchitectureSpec) -> Self {
        match (spec.front_width.is_some(), spec.end_fraction.is_some()) {
            (false, false) => Variant::Baseline,
            (true, false) => Variant::Front,
            (false, true) => Variant::End,
            (true, true) => Variant::Dual,
        }
    }
}

const BASELINE_WIDTHS: [usize; 7] = [1000, 2000, 4000, 8000, 16000, 32000, 64000];
const CAPPED_WIDTHS: [usize; 4] = [8000, 16000, 32000, 64000];
const FRONT_WIDTHS: [usize; 2] = [2000, 4000];
const END_FRACTIONS: [f64; 2] = [0.5, 0.75];

/// The standard grid: 448 baselines over `L_W` 1k..64k, `L_D` 1..8 and `b`
/// 1..8, plus front, end and dual capped variants over `L_W` 8k..64k and
/// `L_D` 3..6 (1472 architectures in all).
pub fn standard_grid(pixels: usize, class_count: usize) -> Vec<ArchitectureSpec> {
    let mut out = Vec::with_capacity(1472);
    for &lw in &BASELINE_WIDTHS {
        for ld in 1..=8 {
            for b in 1..=8 {
                out.push(ArchitectureSpec::baseline(pixels, b, lw, ld, class_count));
            }
        }
    }
    let capped = || {
        CAPPED_WIDTHS
            .iter()
            .flat_map(move |&lw| (3..=6).flat_map(move |ld| (1..=8).map(move |b| ArchitectureSpec::baseline(pixels, b, lw, ld, class_count))))
    };
    for &f in &FRONT_WIDTHS {
        out.extend(capped().map(|s| s.with_front(f)));
    }
    for &e in &END_FRACTIONS {
        out.extend(capped().map(|s| s.with_end(e)));
    }
    for &f in &FRONT_WIDTHS {
        for &e in &END_FRACTIONS {
            out.extend(capped().map(|s| s.with_front(f).with_end(e)));
        }
    }
    out
}

/// One evaluated architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub spec: ArchitectureSpec,
    pub variant: Variant,
    pub estimate: ResourceEstimate,
    #[serde(default)]
    pub accuracy: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl GridRow {
    pub fn new(spec: ArchitectureSpec, estimate: ResourceEstimate) -> Self {
        GridRow {
            variant: Variant::of(&spec),
            seed: spec.wiring_seed,
            spec,
            estimate,
            accuracy: None,
        }
    }

    /// Value of a named numeric column.
    pub fn column(&self, name: &str) -> Option<f64> {
        let s = &self.spec;
        let e = &self.estimate;
        Some(match name {
            "b" => s.bit_depth as f64,
            "L_W" => s.layer_width as f64,
            "L_D" => s.depth as f64,
            "L_end" => s.end_width() as f64,
            "L_front" => s.front_width.unwrap_or(0) as f64,
            "f_end" => s.end_fraction.unwrap_or(1.0),
            "bits" => s.input_bits as f64,
            "gates" => s.total_gates() as f64,
            "lut_input" => e.lut_input as f64,
            "lut_logic" => e.lut_logic as f64,
            "lut_sum" => e.lut_sum as f64,
            "lut_total" => e.lut_total as f64,
            "ff_total" => e.ff_total as f64,
            "cycles" => e.cycles as f64,
            "power_watts" => e.power_watts,
            "accuracy" => return self.accuracy,
            _ => return None,
        })
    }
}

pub const DEFAULT_COLUMNS: [&str; 9] = ["b", "L_W", "L_D", "L_end", "gates", "lut_total", "ff_total", "cycles", "power_watts"];

/// Estimates every architecture in spec mode.
pub fn estimate_grid(specs: &[ArchitectureSpec], cal: &CalibrationParams, plan: &PipelinePlan) -> Result<Vec<GridRow>> {
    specs.iter().map(|s| Ok(GridRow::new(s.clone(), estimate_spec(s, cal, plan)?))).collect()
}

/// Pairwise Pearson correlations; `None` where a column is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.columns.iter().position(|c| c == a)?;
        let j = self.columns.iter().position(|c| c == b)?;
        self.values[i][j]
    }
}

pub fn correlation_matrix(rows: &[GridRow], columns: &[&str]) -> Result<CorrelationMatrix> {
    if rows.is_empty() {
        return Err(Error::domain("correlation over an empty grid"));
    }
    let mut series = Vec::with_capacity(columns.len());
    for c in columns {
        let v: Option<Vec<f64>> = rows.iter().map(|r| r.column(c)).collect();
        series.push(v.ok_or_else(|| Error::domain(format!("column {c} is missing or unknown")))?);
    }
    let k = columns.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = pearson(&series[i], &series[j]).ok();
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics; `None` for an empty sample.
    pub fn of(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd { mean, std: var.sqrt() })
    }
}

/// Effect of one cap configuration relative to matched baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapEffect {
    pub front_width: Option<usize>,
    pub end_fraction: Option<f64>,
    pub pairs: usize,
    /// Percent change of LUTs versus the baseline (negative is a reduction).
    pub lut_pct: MeanStd,
    pub ff_pct: MeanStd,
    /// Cycle change (capped minus baseline).
    pub cycle_delta: MeanStd,
    #[serde(default)]
    pub accuracy_delta: Option<MeanStd>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapComparison {
    pub effects: Vec<CapEffect>,
    /// Capped rows with no matching baseline, excluded from the statistics.
    pub unmatched: Vec<ArchitectureSpec>,
}

type MatchKey = (usize, usize, u32, usize, u64);

fn match_key(s: &ArchitectureSpec) -> MatchKey {
    (s.layer_width, s.depth, s.bit_depth, s.input_bits, s.wiring_seed)
}

/// Compares every capped configuration against the baseline with the same
/// `L_W`, `L_D`, `b`, input width and seed.
pub fn cap_comparison(rows: &[GridRow]) -> Result<CapComparison> {
    if rows.is_empty() {
        return Err(Error::domain("cap comparison over an empty grid"));
    }
    let baselines: BTreeMap<MatchKey, &GridRow> = rows.iter().filter(|r| r.variant == Variant::Baseline).map(|r| (match_key(&r.spec), r)).collect();
    let mut groups: BTreeMap<(Option<usize>, Option<u64>), Vec<(&GridRow, &GridRow)>> = BTreeMap::new();
    let mut unmatched = Vec::new();
    for r in rows.iter().filter(|r| r.variant != Variant::Baseline) {
        match baselines.get(&match_key(&r.spec)) {
            Some(base) => groups
                .entry((r.spec.front_width, r.spec.end_fraction.map(f64::to_bits)))
                .or_default()
                .push((r, base)),
            None => unmatched.push(r.spec.clone()),
        }
    }
    let pct = |a: u64, b: u64| 100.0 * (a as f64 - b as f64) / b as f64;
    let effects = groups
        .into_iter()
        .map(|((front, end), pairs)| {
            let lut: Vec<f64> = pairs.iter().map(|(c, b)| pct(c.estimate.lut_total, b.estimate.lut_total)).collect();
            let ff: Vec<f64> = pairs.iter().map(|(c, b)| pct(c.estimate.ff_total, b.estimate.ff_total)).collect();
            let cyc: Vec<f64> = pairs.iter().map(|(c, b)| c.estimate.cycles as f64 - b.estimate.cycles as f64).collect();
            let acc: Vec<f64> = pairs.iter().filter_map(|(c, b)| Some(c.accuracy? - b.accuracy?)).collect();
            CapEffect {
                front_width: front,
                end_fraction: end.map(f64::from_bits),
                pairs: pairs.len(),
                lut_pct: MeanStd::of(&lut).unwrap(),
                ff_pct: MeanStd::of(&ff).unwrap(),
                cycle_delta: MeanStd::of(&cyc).unwrap(),
                accuracy_delta: MeanStd::of(&acc),
            }
        })
        .collect();
    Ok(CapComparison { effects, unmatched })
}

impl CapComparison {
    /// Plain-text table, one line per cap configuration.
    pub fn to_table(&self) -> String {
        let mut s = String::from("front  f_end  pairs  LUT %            FF %             cycles         accuracy\n");
        for e in &self.effects {
            let front = e.front_width.map_or("-".to_string(), |f| f.to_string());
            let end = e.end_fraction.map_or("-".to_string(), |f| f.to_string());
            let acc = e.accuracy_delta.map_or("-".to_string(), |a| format!("{:+.4} ± {:.4}", a.mean, a.std));
            s.push_str(&format!(
                "{front:<6} {end:<6} {:<6} {:+7.2} ± {:<6.2} {:+7.2} ± {:<6.2} {:+.2} ± {:<5.2} {acc}\n",
                e.pairs, e.lut_pct.mean, e.lut_pct.std, e.ff_pct.mean, e.ff_pct.std, e.cycle_delta.mean, e.cycle_delta.std
            ));
        }
        s
    }
}

const CSV_COLUMNS: [&str; 15] = [
    "b", "L_W", "L_D", "L_front", "f_end", "L_end", "bits", "gates", "lut_input", "lut_logic", "lut_sum", "lut_total", "ff_total", "cycles", "power_watts",
];

/// CSV with a header line; empty accuracy cells where no model was trained.
pub fn to_csv(rows: &[GridRow]) -> String {
    let mut s = String::from("variant,seed,");
    s.push_str(&CSV_COLUMNS.join(","));
    s.push_str(",accuracy\n");
    for r in rows {
        let variant = serde_json::to_value(r.variant).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        s.push_str(&format!("{variant},{}", r.seed));
        for c in CSV_COLUMNS {
            match c {
                "L_front" if r.spec.front_width.is_none() => s.push(','),
                "f_end" if r.spec.end_fraction.is_none() => s.push(','),
                _ => s.push_str(&format!(",{}", r.column(c).unwrap())),
            }
        }
        match r.accuracy {
            Some(a) => s.push_str(&format!(",{a}\n")),
            None => s.push_str(",\n"),
        }
    }
    s
}

pub const GRID_FORMAT: &str = "lgnkit-grid";
pub const GRID_VERSION: u32 = 1;

/// A grid of evaluated architectures with its correlation matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridReport {
    pub format: String,
    pub version: u32,
    pub rows: Vec<GridRow>,
    pub correlation: CorrelationMatrix,
}

impl GridReport {
    pub fn new(rows: Vec<GridRow>, columns: &[&str]) -> Result<Self> {
        let correlation = correlation_matrix(&rows, columns)?;
        Ok(GridReport {
            format: GRID_FORMAT.to_string(),
            version: GRID_VERSION,
            rows,
            correlation,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GridReport = serde_json::from_str(text)?;
        if g.format != GRID_FORMAT || g.version != GRID_VERSION {
            return Err(Error::validation(format!("unsupported grid {} v{}", g.format, g.version)));
        }
        Ok(g)
    }
}

impl CorrelationMatrix {
    /// CSV with a header row of column names; empty cells where undefined.
    pub fn to_csv(&self) -> String {
        let mut s = format!("column,{}\n", self.columns.join(","));
        for (name, row) in self.columns.iter().zip(&self.values) {
            s.push_str(name);
            for v in row {
                match v {
                    Some(x) => s.push_str(&format!(",{x}")),
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }
}
