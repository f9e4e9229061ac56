use lgnkit::compile::PipelinePlan;
use lgnkit::estimate::{estimate_boundaries, estimate_spec, lut_regressors, slr_luts, CalibrationParams, DEVICE_LUTS};
use lgnkit::search::*;
use lgnkit::ArchitectureSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn slr_budget() -> Budget {
    Budget {
        lut_budget: slr_luts(),
        ff_budget: 2_000_000,
        max_cycles: Some(12),
        power_cap_watts: None,
        input_bits: 784,
        require_single_slr: true,
    }
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

#[test]
fn samples_stay_within_bounds() {
    let b = SearchBounds::default();
    let s = sample_space(&b, 784, 100, 3).unwrap();
    assert_eq!(s.len(), 100);
    for x in &s {
        x.validate().unwrap();
        assert!(b.contains(x), "{x:?}");
        assert!((1000..=64000).contains(&x.layer_width));
        assert!((1..=8).contains(&x.depth) && (1..=8).contains(&x.bit_depth));
        assert!(x.front_width.is_none_or(|f| (2000..=4000).contains(&f)));
        assert!(x.end_fraction.is_none_or(|f| f == 0.5 || f == 0.75));
        assert_eq!(x.input_bits, 784 * x.bit_depth as usize);
    }
    assert!(s.iter().any(|x| x.front_width.is_some()) && s.iter().any(|x| x.end_fraction.is_some()));
    assert_eq!(s, sample_space(&b, 784, 100, 3).unwrap());
    assert_ne!(s, sample_space(&b, 784, 100, 4).unwrap());
}

#[test]
fn widths_are_log_uniform() {
    let s = sample_space(&SearchBounds::default(), 784, 4000, 1).unwrap();
    // the geometric midpoint of [1000, 64000] is 8000
    let below = s.iter().filter(|x| x.layer_width < 8000).count() as f64 / s.len() as f64;
    assert!((below - 0.5).abs() < 0.04, "{below}");
}

#[test]
fn pinned_bounds_repeat_one_spec() {
    let spec = ArchitectureSpec::baseline(784, 2, 9000, 4, 10).with_end(0.5);
    let s = sample_space(&SearchBounds::point(&spec), 784, 20, 0).unwrap();
    assert!(s.iter().all(|x| x.layer_width == 9000 && x.depth == 4 && x.bit_depth == 2));
    let bad = SearchBounds {
        depth_min: 5,
        depth_max: 2,
        ..Default::default()
    };
    assert!(matches!(sample_space(&bad, 784, 10, 0), Err(lgnkit::Error::Domain(_))));
    assert!(sample_space(&SearchBounds::default(), 784, 0, 0).is_err());
}

#[test]
fn proxy_ordering() {
    let w = ProxyWeights::default();
    let base = ArchitectureSpec::baseline(784, 2, 8000, 3, 10);
    let deeper = ArchitectureSpec::baseline(784, 2, 8000, 4, 10);
    let more_bits = ArchitectureSpec::baseline(784, 3, 8000, 3, 10);
    assert!(proxy_score(&deeper, &w) > proxy_score(&base, &w));
    assert!(proxy_score(&more_bits, &w) < proxy_score(&base, &w));
    assert_eq!(proxy_score(&base, &w), proxy_score(&base.clone(), &w));
}

#[test]
fn single_slr_search_is_sound() {
    let budget = slr_budget();
    let cfg = SearchConfig::default();
    let out = search(&budget, &cfg).unwrap();
    assert_eq!(out.status, SearchStatus::Found);
    assert!(!out.pareto.is_empty());
    for c in &out.pareto {
        let again = estimate_spec(&c.spec, &cfg.calibration, &cfg.plan).unwrap();
        assert_eq!(again, c.estimate);
        assert!(again.lut_total <= slr_luts() && again.lut_total <= DEVICE_LUTS);
        assert!(again.cycles <= 12);
        assert!(again.ff_total <= budget.ff_budget);
        assert!(c.feasible && !c.dominated);
        assert!(cfg.bounds.contains(&c.spec));
    }
    let pts: Vec<(f64, u64, u32)> = out.pareto.iter().map(|c| (c.proxy_score, c.estimate.lut_total, c.estimate.cycles)).collect();
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let dom = b.0 >= a.0 && b.1 <= a.1 && b.2 <= a.2 && (b.0 > a.0 || b.1 < a.1 || b.2 < a.2);
            assert!(!(i != j && dom), "{b:?} dominates {a:?}");
        }
    }
    assert_eq!(out, search(&budget, &cfg).unwrap());
}

#[test]
fn pareto_filter_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let pts: Vec<(f64, u64, u32)> = (0..40).map(|_| (rng.random_range(0..6) as f64, rng.random_range(0..6), rng.random_range(0..6))).collect();
        let keep = pareto_indices(&pts);
        for i in 0..pts.len() {
            let dominated = pts.iter().any(|q| dominates(q, &pts[i]));
            assert_eq!(keep.contains(&i), !dominated);
        }
    }
    assert!(!dominates(&(1.0, 2, 3), &(1.0, 2, 3)));
    assert!(dominates(&(1.0, 2, 2), &(1.0, 2, 3)));
}

#[test]
fn lambda_lowers_median_end_width() {
    let budget = slr_budget();
    let run = |lambda: f64| {
        let cfg = SearchConfig {
            lambda,
            ..Default::default()
        };
        median(search(&budget, &cfg).unwrap().pareto.iter().map(|c| c.spec.end_width()).collect())
    };
    let (with, without) = (run(1e-4), run(0.0));
    assert!(with < without, "lambda>0: {with}, lambda=0: {without}");
}

#[test]
fn one_lut_budget_reports_near_misses() {
    let budget = Budget {
        lut_budget: 1,
        ..slr_budget()
    };
    let out = search(&budget, &SearchConfig::default()).unwrap();
    assert_eq!(out.status, SearchStatus::NoneFeasible);
    assert!(out.pareto.is_empty());
    assert_eq!(out.feasible_count, 0);
    assert_eq!(out.nearest_misses.len(), 5);
    assert!(out.nearest_misses.windows(2).all(|w| w[0].excess <= w[1].excess));
    assert!(out.nearest_misses.iter().all(|m| m.violations.iter().any(|v| v.starts_with("lut_total"))));
}

#[test]
fn larger_budgets_never_shrink_the_feasible_set() {
    let mut last = 0;
    for lut in [20_000u64, 60_000, 150_000, 300_000, 892_000] {
        let budget = Budget {
            lut_budget: lut,
            max_cycles: None,
            require_single_slr: false,
            ..slr_budget()
        };
        let out = search(&budget, &SearchConfig::default()).unwrap();
        assert!(out.feasible_count >= last, "{lut}: {} < {last}", out.feasible_count);
        last = out.feasible_count;
    }
}

#[test]
fn device_gate_applies_without_single_slr() {
    let budget = Budget {
        lut_budget: 10_000_000,
        ff_budget: 10_000_000,
        max_cycles: None,
        power_cap_watts: None,
        input_bits: 784,
        require_single_slr: false,
    };
    let out = search(&budget, &SearchConfig::default()).unwrap();
    assert!(out.pareto.iter().all(|c| c.estimate.lut_total <= DEVICE_LUTS));
    let e = estimate_spec(&ArchitectureSpec::baseline(784, 1, 300_000, 8, 10), &CalibrationParams::default(), &PipelinePlan::default()).unwrap();
    assert!(e.lut_total > DEVICE_LUTS);
    assert!(!budget.is_feasible(&e));
}

#[test]
fn budget_guards() {
    let mut b = slr_budget();
    b.lut_budget = 0;
    assert!(search(&b, &SearchConfig::default()).is_err());
    let mut b = slr_budget();
    b.max_cycles = Some(0);
    assert!(b.validate().is_err());
    let b: Result<Budget, _> = serde_json::from_str(r#"{"lut_budget": 5, "ff_budget": 5, "input_bits": 5, "extra": 1}"#);
    assert!(b.is_err());
}

/// Synthetic measurements drawn from known packing, input and interface constants.
fn synthetic(truth: &CalibrationParams, n: usize, seed: u64, noise: f64) -> Vec<Measurement> {
    let plan = PipelinePlan::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_space(&SearchBounds::default(), 784, n, seed)
        .unwrap()
        .into_iter()
        .map(|spec| {
            let (gates, bits, sum) = lut_regressors(&spec, truth).unwrap();
            let lut = gates / truth.gates_per_lut + truth.alpha_in * bits + truth.delta_const + sum;
            let regs: usize = estimate_boundaries(&spec, &plan).iter().sum();
            let ff = truth.ff_per_input_bit * bits + regs as f64;
            let jitter = 1.0 + noise * rng.random_range(-1.0..1.0);
            Measurement {
                spec,
                lut_total: lut * jitter,
                ff_total: Some(ff),
            }
        })
        .collect()
}

#[test]
fn refinement_recovers_ground_truth() {
    let truth = CalibrationParams {
        gates_per_lut: 2.1,
        alpha_in: 0.8,
        delta_const: 4200.0,
        ff_per_input_bit: 20.0,
        ..Default::default()
    };
    let fit = refine_with_measurements(&CalibrationParams::default(), &PipelinePlan::default(), &synthetic(&truth, 30, 5, 0.0)).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 0.01 * b.abs();
    assert!(close(fit.gates_per_lut, 2.1), "{}", fit.gates_per_lut);
    assert!(close(fit.alpha_in, 0.8), "{}", fit.alpha_in);
    assert!(close(fit.delta_const, 4200.0), "{}", fit.delta_const);
    assert!(close(fit.ff_per_input_bit, 20.0));
}

#[test]
fn refinement_lowers_held_out_error() {
    let truth = CalibrationParams {
        gates_per_lut: 1.8,
        alpha_in: 1.2,
        delta_const: 3000.0,
        ..Default::default()
    };
    let base = CalibrationParams::default();
    let plan = PipelinePlan::default();
    let train = synthetic(&truth, 40, 1, 0.03);
    let held = synthetic(&truth, 40, 2, 0.03);
    let fit = refine_with_measurements(&base, &plan, &train).unwrap();
    let mae = |cal: &CalibrationParams| {
        held.iter().map(|m| (estimate_spec(&m.spec, cal, &plan).unwrap().lut_total as f64 - m.lut_total).abs()).sum::<f64>() / held.len() as f64
    };
    assert!(mae(&fit) < mae(&base), "{} vs {}", mae(&fit), mae(&base));
}

#[test]
fn refinement_guards() {
    let base = CalibrationParams::default();
    let plan = PipelinePlan::default();
    let one = synthetic(&base, 1, 0, 0.0);
    assert!(matches!(refine_with_measurements(&base, &plan, &one), Err(lgnkit::Error::Fit(_))));
    let spec = ArchitectureSpec::baseline(784, 1, 8000, 3, 10);
    let same: Vec<Measurement> = (0..5)
        .map(|i| Measurement {
            spec: spec.clone(),
            lut_total: 10000.0 + i as f64,
            ff_total: None,
        })
        .collect();
    assert!(matches!(refine_with_measurements(&base, &plan, &same), Err(lgnkit::Error::Fit(_))));
}
