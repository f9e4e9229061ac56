//! Budget-constrained architecture search: random sampling, hill climbing
//! with an `L_end` penalty, and Pareto filtering.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureSpec;
use crate::compile::PipelinePlan;
use crate::error::{Error, Result};
use crate::estimate::{estimate_boundaries, estimate_spec, lut_regressors, slr_luts, CalibrationParams, ResourceEstimate, DEVICE_LUTS};

/// Ranges of the design space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBounds {
    pub width_min: usize,
    pub width_max: usize,
    pub depth_min: usize,
    pub depth_max: usize,
    pub bits_min: u32,
    pub bits_max: u32,
    /// Front cap width range; `None` disables front caps.
    pub front: Option<(usize, usize)>,
    /// Allowed end cap fractions; empty disables end caps.
    pub end_fractions: Vec<f64>,
    pub class_count: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            width_min: 1000,
            width_max: 64000,
            depth_min: 1,
            depth_max: 8,
            bits_min: 1,
            bits_max: 8,
            front: Some((2000, 4000)),
            end_fractions: vec![0.5, 0.75],
            class_count: 10,
        }
    }
}

impl SearchBounds {
    pub fn validate(&self) -> Result<()> {
        let empty = self.width_min == 0
            || self.width_min > self.width_max
            || self.depth_min == 0
            || self.depth_min > self.depth_max
            || self.bits_min == 0
            || self.bits_min > self.bits_max
            || self.bits_max > 8
            || self.class_count < 2
            || self.front.is_some_and(|(lo, hi)| lo == 0 || lo > hi);
        if empty {
            return Err(Error::domain("search bounds are empty"));
        }
        if self.end_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::domain("end fractions must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Bounds pinned to a single architecture.
    pub fn point(spec: &ArchitectureSpec) -> Self {
        SearchBounds {
            width_min: spec.layer_width,
            width_max: spec.layer_width,
            depth_min: spec.depth,
            depth_max: spec.depth,
            bits_min: spec.bit_depth,
            bits_max: spec.bit_depth,
            front: spec.front_width.map(|f| (f, f)),
            end_fractions: spec.end_fraction.into_iter().collect(),
            class_count: spec.class_count,
        }
    }

    pub fn contains(&self, s: &ArchitectureSpec) -> bool {
        (self.width_min..=self.width_max).contains(&s.layer_width)
            && (self.depth_min..=self.depth_max).contains(&s.depth)
            && (self.bits_min..=self.bits_max).contains(&s.bit_depth)
            && match (s.front_width, self.front) {
                (None, _) => true,
                (Some(f), Some((lo, hi))) => (lo..=hi).contains(&f),
                (Some(_), None) => false,
            }
            && s.end_fraction.is_none_or(|f| self.end_fractions.contains(&f))
    }
}

/// Resource and latency limits (plus the data width they apply to).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub lut_budget: u64,
    pub ff_budget: u64,
    #[serde(default)]
    pub max_cycles: Option<u32>,
    #[serde(default)]
    pub power_cap_watts: Option<f64>,
    /// Pixels (features) per sample; the encoded width is this times `b`.
    pub input_bits: usize,
    #[serde(default)]
    pub require_single_slr: bool,
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if self.lut_budget == 0 || self.ff_budget == 0 || self.input_bits == 0 {
            return Err(Error::validation("budgets and input width must be positive"));
        }
        if self.max_cycles == Some(0) || self.power_cap_watts.is_some_and(|p| !(p > 0.0)) {
            return Err(Error::validation("cycle and power caps must be positive"));
        }
        Ok(())
    }

    /// Every violated limit, with the relative excess over it.
    pub fn violations(&self, est: &ResourceEstimate) -> Vec<(String, f64)> {
        let mut v = Vec::new();
        let mut check = |name: &str, value: f64, limit: f64| {
            if value > limit {
                v.push((format!("{name} {value} > {limit}"), value / limit - 1.0));
            }
        };
        check("lut_total", est.lut_total as f64, self.lut_budget as f64);
        check("lut_total (device)", est.lut_total as f64, DEVICE_LUTS as f64);
        if self.require_single_slr {
            check("lut_total (single SLR)", est.lut_total as f64, slr_luts() as f64);
        }
        check("ff_total", est.ff_total as f64, self.ff_budget as f64);
        if let Some(c) = self.max_cycles {
            check("cycles", est.cycles as f64, c as f64);
        }
        if let Some(p) = self.power_cap_watts {
            check("power_watts", est.power_watts, p);
        }
        v
    }

    pub fn is_feasible(&self, est: &ResourceEstimate) -> bool {
        self.violations(est).is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxyWeights {
    pub gates: f64,
    pub depth: f64,
    pub bits: f64,
}

impl Default for ProxyWeights {
    fn default() -> Self {
        ProxyWeights {
            gates: 1.0,
            depth: 0.5,
            bits: 0.25,
        }
    }
}

/// Ranking heuristic: more gates and more depth help, extra bit depth hurts.
/// Not an accuracy prediction.
pub fn proxy_score(spec: &ArchitectureSpec, w: &ProxyWeights) -> f64 {
    w.gates * (spec.total_gates() as f64).ln() + w.depth * spec.depth as f64 - w.bits * (spec.bit_depth as f64 - 1.0)
}

fn build_spec(pixels: usize, classes: usize, b: u32, lw: usize, ld: usize, front: Option<usize>, end: Option<f64>) -> ArchitectureSpec {
    let mut s = ArchitectureSpec::baseline(pixels, b, lw, ld, classes);
    s.front_width = front;
    s.end_fraction = end;
    s
}

/// Draws `n` valid architectures: log-uniform widths, uniform depth and bit
/// depth, each cap present with probability one half.
pub fn sample_space(bounds: &SearchBounds, pixels: usize, n: usize, seed: u64) -> Result<Vec<ArchitectureSpec>> {
    bounds.validate()?;
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lmin, lmax) = ((bounds.width_min as f64).ln(), (bounds.width_max as f64).ln());
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n + 1000 {
            return Err(Error::domain("bounds admit no valid architecture"));
        }
        let lw = if lmin == lmax {
            bounds.width_min
        } else {
            (rng.random_range(lmin..=lmax).exp().round() as usize).clamp(bounds.width_min, bounds.width_max)
        };
        let ld = rng.random_range(bounds.depth_min..=bounds.depth_max);
        let b = rng.random_range(bounds.bits_min..=bounds.bits_max);
        let front = match bounds.front {
            Some((lo, hi)) if rng.random_bool(0.5) => Some(rng.random_range(lo..=hi)),
            _ => None,
        };
        let end = if !bounds.end_fractions.is_empty() && rng.random_bool(0.5) {
            Some(bounds.end_fractions[rng.random_range(0..bounds.end_fractions.len())])
        } else {
            None
        };
        let s = build_spec(pixels, bounds.class_count, b, lw, ld, front, end);
        if s.validate().is_ok() {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub samples: usize,
    pub chains: usize,
    pub steps_per_chain: usize,
    /// Penalty per gate of `L_end` in the climbing objective.
    pub lambda: f64,
    pub seed: u64,
    pub weights: ProxyWeights,
    pub bounds: SearchBounds,
    pub calibration: CalibrationParams,
    pub plan: PipelinePlan,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            samples: 256,
            chains: 8,
            steps_per_chain: 64,
            lambda: 1e-4,
            seed: 0,
            weights: ProxyWeights::default(),
            bounds: SearchBounds::default(),
            calibration: CalibrationParams::default(),
            plan: PipelinePlan::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub spec: ArchitectureSpec,
    pub estimate: ResourceEstimate,
    pub proxy_score: f64,
    pub trained_accuracy: Option<f64>,
    pub feasible: bool,
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub spec: ArchitectureSpec,
    pub estimate: ResourceEstimate,
    pub violations: Vec<String>,
    /// Largest relative excess over any limit.
    pub excess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    NoneFeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub pareto: Vec<CandidateReport>,
    pub evaluated: usize,
    pub feasible_count: usize,
    pub nearest_misses: Vec<NearMiss>,
}

struct Scored {
    spec: ArchitectureSpec,
    est: ResourceEstimate,
    proxy: f64,
    feasible: bool,
}

fn score(spec: ArchitectureSpec, budget: &Budget, cfg: &SearchConfig) -> Option<Scored> {
    let est = estimate_spec(&spec, &cfg.calibration, &cfg.plan).ok()?;
    Some(Scored {
        proxy: proxy_score(&spec, &cfg.weights),
        feasible: budget.is_feasible(&est),
        est,
        spec,
    })
}

fn objective(s: &Scored, lambda: f64) -> f64 {
    s.proxy - lambda * s.spec.end_width() as f64
}

/// A neighbor differing in one field.
fn mutate(s: &ArchitectureSpec, bounds: &SearchBounds, rng: &mut ChaCha8Rng) -> ArchitectureSpec {
    let mut t = s.clone();
    let scale = |v: usize, up: bool| if up { (v as f64 * 1.25).round() as usize } else { (v as f64 / 1.25).round() as usize };
    match rng.random_range(0..6) {
        0 => t.depth = if rng.random_bool(0.5) { t.depth + 1 } else { t.depth.saturating_sub(1) },
        1 => t.bit_depth = if rng.random_bool(0.5) { t.bit_depth + 1 } else { t.bit_depth.saturating_sub(1) },
        2 => t.layer_width = scale(t.layer_width, rng.random_bool(0.5)),
        3 => match (t.front_width, bounds.front) {
            (Some(f), _) => t.front_width = Some(scale(f, rng.random_bool(0.5))),
            (None, Some((lo, hi))) => t.front_width = Some(rng.random_range(lo..=hi)),
            (None, None) => {}
        },
        4 => {
            t.front_width = match (t.front_width, bounds.front) {
                (Some(_), _) => None,
                (None, Some((lo, hi))) => Some(rng.random_range(lo..=hi)),
                (None, None) => None,
            }
        }
        _ => {
            let mut options: Vec<Option<f64>> = vec![None];
            options.extend(bounds.end_fractions.iter().map(|&f| Some(f)));
            options.retain(|o| *o != t.end_fraction);
            if !options.is_empty() {
                t.end_fraction = options[rng.random_range(0..options.len())];
            }
        }
    }
    t.input_bits = s.input_bits / s.bit_depth as usize * t.bit_depth.max(1) as usize;
    t
}

/// Non-dominated members under (maximize proxy, minimize LUTs, minimize cycles).
pub fn pareto_indices(points: &[(f64, u64, u32)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().enumerate().any(|(j, q)| j != i && dominates(q, &points[i])))
        .collect()
}

pub fn dominates(a: &(f64, u64, u32), b: &(f64, u64, u32)) -> bool {
    let no_worse = a.0 >= b.0 && a.1 <= b.1 && a.2 <= b.2;
    let better = a.0 > b.0 || a.1 < b.1 || a.2 < b.2;
    no_worse && better
}

/// Random sampling, then hill climbing from the best feasible samples.
///
/// Each chain starts from a distinct top sample and accepts a one-field
/// mutation when it stays feasible and raises `proxy - lambda * L_end`. The
/// Pareto set is taken over every state the chains visit.
pub fn search(budget: &Budget, cfg: &SearchConfig) -> Result<SearchOutcome> {
    budget.validate()?;
    cfg.calibration.validate()?;
    cfg.plan.validate()?;
    let pixels = budget.input_bits;
    let samples = sample_space(&cfg.bounds, pixels, cfg.samples.max(1), cfg.seed)?;
    let scored: Vec<Scored> = samples.into_par_iter().filter_map(|s| score(s, budget, cfg)).collect();
    let mut evaluated = scored.len();
    let mut feasible: Vec<&Scored> = scored.iter().filter(|s| s.feasible).collect();
    if feasible.is_empty() {
        let mut misses: Vec<NearMiss> = scored
            .iter()
            .map(|s| {
                let v = budget.violations(&s.est);
                NearMiss {
                    spec: s.spec.clone(),
                    estimate: s.est.clone(),
                    excess: v.iter().map(|x| x.1).fold(0.0, f64::max),
                    violations: v.into_iter().map(|x| x.0).collect(),
                }
            })
            .collect();
        misses.sort_by(|a, b| a.excess.total_cmp(&b.excess));
        misses.truncate(5);
        return Ok(SearchOutcome {
            status: SearchStatus::NoneFeasible,
            pareto: Vec::new(),
            evaluated,
            feasible_count: 0,
            nearest_misses: misses,
        });
    }
    let feasible_count = feasible.len();
    feasible.sort_by(|a, b| objective(b, cfg.lambda).total_cmp(&objective(a, cfg.lambda)));

    let mut pool: Vec<Scored> = Vec::new();
    for (c, start) in feasible.iter().take(cfg.chains.max(1)).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(c as u64 + 1)));
        let mut cur = Scored {
            spec: start.spec.clone(),
            est: start.est.clone(),
            proxy: start.proxy,
            feasible: true,
        };
        for _ in 0..cfg.steps_per_chain {
            let cand = mutate(&cur.spec, &cfg.bounds, &mut rng);
            if !cfg.bounds.contains(&cand) || cand.validate().is_err() {
                continue;
            }
            let Some(s) = score(cand, budget, cfg) else { continue };
            evaluated += 1;
            if s.feasible && objective(&s, cfg.lambda) > objective(&cur, cfg.lambda) {
                pool.push(std::mem::replace(&mut cur, s));
            }
        }
        pool.push(cur);
    }
    pool.sort_by(|a, b| serde_json::to_string(&a.spec).unwrap().cmp(&serde_json::to_string(&b.spec).unwrap()));
    pool.dedup_by(|a, b| a.spec == b.spec);
    let pts: Vec<(f64, u64, u32)> = pool.iter().map(|s| (s.proxy, s.est.lut_total, s.est.cycles)).collect();
    let keep = pareto_indices(&pts);
    let pareto = keep
        .into_iter()
        .map(|i| CandidateReport {
            spec: pool[i].spec.clone(),
            estimate: pool[i].est.clone(),
            proxy_score: pool[i].proxy,
            trained_accuracy: None,
            feasible: true,
            dominated: false,
        })
        .collect();
    Ok(SearchOutcome {
        status: SearchStatus::Found,
        pareto,
        evaluated,
        feasible_count,
        nearest_misses: Vec::new(),
    })
}

/// A measured implementation of one architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub spec: ArchitectureSpec,
    pub lut_total: f64,
    #[serde(default)]
    pub ff_total: Option<f64>,
}

/// Refits the logic packing density, input coefficient and interface
/// constant by least squares on `lut_total - LUT_sum = a*gates + b*bits + c`.
/// When every measurement carries a flip-flop count, the per-bit flip-flop
/// coefficient is refit as well.
pub fn refine_with_measurements(base: &CalibrationParams, plan: &PipelinePlan, measured: &[Measurement]) -> Result<CalibrationParams> {
    if measured.len() < 2 {
        return Err(Error::Fit("at least two measurements are needed".into()));
    }
    let rows = measured.len();
    let mut x = DMatrix::<f64>::zeros(rows, 3);
    let mut y = DVector::<f64>::zeros(rows);
    for (r, m) in measured.iter().enumerate() {
        let (gates, bits, sum) = lut_regressors(&m.spec, base)?;
        x[(r, 0)] = gates;
        x[(r, 1)] = bits;
        x[(r, 2)] = 1.0;
        y[r] = m.lut_total - sum;
    }
    let theta = least_squares(&x, &y)?;
    if theta[0] <= 0.0 {
        return Err(Error::Fit(format!("non-positive LUTs per gate {}", theta[0])));
    }
    let mut cal = base.clone();
    cal.gates_per_lut = 1.0 / theta[0];
    cal.alpha_in = theta[1].max(0.0);
    cal.delta_const = theta[2].max(0.0);
    if measured.iter().all(|m| m.ff_total.is_some()) {
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for m in measured {
            let bits = m.spec.input_bits as f64;
            let regs: usize = estimate_boundaries(&m.spec, plan).iter().sum();
            sxx += bits * bits;
            sxy += bits * (m.ff_total.unwrap() - regs as f64);
        }
        if sxx > 0.0 {
            cal.ff_per_input_bit = (sxy / sxx).max(0.0);
        }
    }
    cal.validate()?;
    Ok(cal)
}

/// Minimum-norm-free least squares that refuses rank-deficient designs.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() < x.ncols() {
        return Err(Error::Fit(format!("{} measurements cannot determine {} parameters", x.nrows(), x.ncols())));
    }
    // scale columns so the conditioning test is unit-free
    let norms: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).norm()).collect();
    if norms.iter().any(|&n| n == 0.0) {
        return Err(Error::Fit("a regressor is identically zero".into()));
    }
    let mut xs = x.clone();
    for (j, &n) in norms.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = xs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-9 * smax {
        return Err(Error::Fit("measurements do not vary enough to separate the parameters".into()));
    }
    let sol = svd.solve(y, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    Ok(DVector::from_iterator(sol.len(), sol.iter().zip(&norms).map(|(v, n)| v / n)))
}
