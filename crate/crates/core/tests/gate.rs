use lgnkit::gate::{gate_truth, softmax_backward};
use lgnkit::{GateId, GateWeights, MixtureCoefficients};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn truth_table_examples() {
    assert!(gate_truth(8, true, true).unwrap());
    assert!(!gate_truth(8, false, true).unwrap());
    assert!(gate_truth(6, true, false).unwrap());
    assert!(!gate_truth(6, true, true).unwrap());
    for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
        assert!(!gate_truth(0, a, b).unwrap());
        assert!(gate_truth(15, a, b).unwrap());
    }
    assert!(gate_truth(16, true, true).is_err());
}

#[test]
fn named_gates() {
    let cases = [(GateId::AND, [0, 0, 0, 1]), (GateId::XOR, [0, 1, 1, 0]), (GateId::OR, [0, 1, 1, 1]), (GateId::NAND, [1, 1, 1, 0])];
    for (g, table) in cases {
        for (i, &(a, b)) in [(false, false), (false, true), (true, false), (true, true)].iter().enumerate() {
            assert_eq!(g.eval(a, b) as u8, table[i], "{g} on ({a}, {b})");
        }
    }
}

#[test]
fn corners_match_truth_exactly() {
    for g in GateId::all() {
        for a in [0.0f64, 1.0] {
            for b in [0.0f64, 1.0] {
                let t = g.eval(a == 1.0, b == 1.0) as u8 as f64;
                assert_eq!(g.soft(a, b).unwrap(), t);
            }
        }
    }
}

#[test]
fn relaxation_examples() {
    assert!((GateId::AND.soft(0.5f64, 0.5).unwrap() - 0.25).abs() < 1e-15);
    assert!((GateId::XOR.soft(0.5f64, 0.5).unwrap() - 0.5).abs() < 1e-15);
    let (da, db) = GateId::AND.soft_grad(0.3f64, 0.7).unwrap();
    assert!((da - 0.7).abs() < 1e-15 && (db - 0.3).abs() < 1e-15);
    assert_eq!(GateId::FALSE.soft_grad(0.2f64, 0.9).unwrap(), (0.0, 0.0));
    assert!(GateId::AND.soft(1.5f64, 0.5).is_err());
    assert!(GateId::AND.soft(0.5f64, -0.1).is_err());
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    for _ in 0..1000 {
        let g = GateId::new(rng.random_range(0..16)).unwrap();
        let a: f64 = rng.random_range(h..1.0 - h);
        let b: f64 = rng.random_range(h..1.0 - h);
        let (da, db) = g.soft_grad(a, b).unwrap();
        let fa = (g.soft(a + h, b).unwrap() - g.soft(a - h, b).unwrap()) / (2.0 * h);
        let fb = (g.soft(a, b + h).unwrap() - g.soft(a, b - h).unwrap()) / (2.0 * h);
        assert!((da - fa).abs() <= 1e-6 * da.abs().max(1.0), "{g} d/da {da} vs {fa}");
        assert!((db - fb).abs() <= 1e-6 * db.abs().max(1.0), "{g} d/db {db} vs {fb}");
    }
}

#[test]
fn mixture_examples() {
    let one_hot = GateWeights::<f64>::one_hot(GateId::XOR, 1e6);
    assert!((one_hot.mixture_forward(0.3, 0.8).unwrap() - GateId::XOR.soft(0.3, 0.8).unwrap()).abs() < 1e-12);
    assert!((GateWeights::<f64>::uniform().mixture_forward(0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(GateWeights::<f64>::one_hot(GateId::TRUE, 1e6).mixture_forward(0.4, 0.1).unwrap(), 1.0);
    let mut bad = GateWeights::<f64>::uniform();
    bad.0[3] = f64::NAN;
    assert!(bad.mixture_forward(0.5, 0.5).is_err());
}

#[test]
fn f32_matches_f64() {
    for g in GateId::all() {
        let x = g.soft(0.25f32, 0.75f32).unwrap() as f64;
        let y = g.soft(0.25f64, 0.75f64).unwrap();
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn softmax_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w: [f64; 16] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    let (a, b) = (0.3, 0.6);
    let f = |w: &[f64; 16]| GateWeights(*w).mixture_forward(a, b).unwrap();
    let p = GateWeights(w).softmax();
    // d out / d p_j = soft(j, a, b)
    let dp: [f64; 16] = std::array::from_fn(|j| GateId::new(j as u8).unwrap().soft(a, b).unwrap());
    let g = softmax_backward(&p, &dp);
    for j in 0..16 {
        let mut hi = w;
        let mut lo = w;
        hi[j] += 1e-6;
        lo[j] -= 1e-6;
        let fd = (f(&hi) - f(&lo)) / 2e-6;
        assert!((g[j] - fd).abs() < 1e-8, "logit {j}: {} vs {fd}", g[j]);
    }
}

#[test]
fn coefficients_reproduce_mixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let w: [f64; 16] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let gw = GateWeights(w);
        let c = MixtureCoefficients::from_probabilities(&gw.softmax());
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let direct = gw.mixture_forward(a, b).unwrap();
        let via = c.0[0] + c.0[1] * a + c.0[2] * b + c.0[3] * a * b;
        assert!((direct - via).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn soft_stays_in_unit_interval(id in 0u8..16, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let v = GateId::new(id).unwrap().soft(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn complement_symmetry(id in 0u8..16, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let g = GateId::new(id).unwrap();
        let s = g.soft(a, b).unwrap() + g.complement().soft(a, b).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert_eq!(g.complement().id(), 15 - id);
    }

    #[test]
    fn multilinear_in_each_argument(id in 0u8..16, a0 in 0.0f64..=1.0, a1 in 0.0f64..=1.0, b in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let g = GateId::new(id).unwrap();
        let mid = g.soft(a0 + t * (a1 - a0), b).unwrap();
        let lin = g.soft(a0, b).unwrap() + t * (g.soft(a1, b).unwrap() - g.soft(a0, b).unwrap());
        prop_assert!((mid - lin).abs() < 1e-12);
    }

    #[test]
    fn mixture_in_unit_interval_and_normalized(w in proptest::array::uniform16(-30.0f64..30.0), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let gw = GateWeights(w);
        let s: f64 = gw.softmax().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-9);
        let v = gw.mixture_forward(a, b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn inversion_helpers(id in 0u8..16, a: bool, b: bool) {
        let g = GateId::new(id).unwrap();
        prop_assert_eq!(g.with_a_inverted().eval(a, b), g.eval(!a, b));
        prop_assert_eq!(g.with_b_inverted().eval(a, b), g.eval(a, !b));
        prop_assert_eq!(g.swapped().eval(a, b), g.eval(b, a));
    }
}
