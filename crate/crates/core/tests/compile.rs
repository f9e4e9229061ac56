mod common;

use lgnkit::compile::*;
use lgnkit::estimate::estimate_cycles;
use lgnkit::netsim::{simulate, simulate_many};
use lgnkit::train::{evaluate, EvalMode};
use lgnkit::{ArchitectureSpec, GateId, GateWeights, SoftLgnF64};
use proptest::prelude::*;

#[test]
fn discretize_takes_lowest_argmax() {
    let s = common::spec(4, 4, 1, 2, 0);
    let mut net = SoftLgnF64::init(&s).unwrap();
    net.layers[0].weights[0] = GateWeights::one_hot(GateId::XOR, 5.0);
    net.layers[0].weights[1] = GateWeights::uniform();
    let h = discretize(&net);
    assert_eq!(h.layers[0].gates[0], GateId::XOR);
    assert_eq!(h.layers[0].gates[1], GateId::FALSE);
    assert_eq!(h.layers[0].a, net.layers[0].a);
    assert_eq!(h.layers[0].b, net.layers[0].b);
}

#[test]
fn hard_accuracy_matches_trainer_evaluation() {
    let s = common::spec(40, 60, 2, 3, 4);
    let net = SoftLgnF64::init(&s).unwrap();
    let rows = common::random_inputs(200, 40, 1);
    let labels: Vec<u8> = (0..200).map(|i| (i % 3) as u8).collect();
    let data = lgnkit::data::EncodedDataset::from_rows(40, 3, &rows, &labels).unwrap();
    assert_eq!(discretize(&net).accuracy(&data).unwrap(), evaluate(&net, &data, EvalMode::Hard).unwrap());
}

fn constant_model(gate: GateId) -> HardLgn {
    let s = common::spec(10, 12, 2, 3, 2);
    let mut h = common::random_hard(&s);
    for l in &mut h.layers {
        l.gates.iter_mut().for_each(|g| *g = gate);
    }
    h
}

#[test]
fn constant_model_prunes_to_constant_class() {
    let h = constant_model(GateId::TRUE);
    let nl = compile(&h, &PipelinePlan::default()).unwrap();
    assert_eq!(nl.logic_count() + nl.full_adder_count() + nl.half_adder_count() + nl.compare_count(), 0);
    for x in common::random_inputs(20, 10, 3) {
        assert_eq!(simulate(&nl, &x).unwrap(), 0);
    }
}

#[test]
fn and_with_true_becomes_a_wire() {
    let mut nl = Netlist::empty(2, 2);
    let one = nl.push(Op::Const { value: true }, 0);
    let x = nl.push(Op::Input { index: 0 }, 0);
    let g = nl.push(
        Op::Gate2 {
            gate: GateId::AND,
            a: Signal::of(x),
            b: Signal::of(one),
        },
        0,
    );
    nl.outputs = vec![Signal::of(g)];
    let p = prune(&nl);
    assert_eq!(p.logic_count(), 0);
    for v in [false, true] {
        assert_eq!(simulate(&p, &[v, false]).unwrap(), v as usize);
    }
}

#[test]
fn pruning_preserves_random_dags() {
    for seed in 0..1000 {
        let nl = common::random_dag(seed, 6, 40, 3);
        nl.validate().unwrap();
        let p = prune(&nl);
        p.validate().unwrap();
        assert!(p.nodes.len() <= nl.nodes.len(), "seed {seed} grew");
        for w in 0..2 {
            let lanes = common::random_lanes(6, seed * 7 + w);
            assert_eq!(nl.output_lanes(&nl.eval_lanes(&lanes)), p.output_lanes(&p.eval_lanes(&lanes)), "seed {seed}");
        }
    }
}

#[test]
fn popcount_counts_match_closed_forms() {
    let mut prev_depth = 0;
    for n in 1..=4096usize {
        let s = PopcountShape::build(n);
        assert!(s.depth >= prev_depth, "depth drops at n={n}");
        prev_depth = s.depth;
        let lg = (usize::BITS - n.leading_zeros()) as usize;
        assert_eq!(s.full_adders, n - lg, "n={n}");
        assert!(s.half_adders <= lg, "n={n}");
        assert_eq!(s.width, count_width(n));
        assert_eq!(s.full_adders, full_adder_count(n));
        assert_eq!(s.half_adders, half_adder_count(n));
    }
    assert_eq!(full_adder_count(3), 1);
    assert_eq!(half_adder_count(3), 0);
    assert_eq!(full_adder_count(7), 4);
}

#[test]
fn group_of_three_uses_one_full_adder_per_class() {
    let s = common::spec(8, 6, 1, 2, 0);
    let h = common::random_hard(&s);
    let nl = build_netlist(&h, &PipelinePlan::default()).unwrap();
    assert_eq!(nl.full_adder_count(), 2);
    assert_eq!(nl.half_adder_count(), 0);
}

#[test]
fn comparator_tree_shape() {
    assert_eq!(compare_depth(10), 4);
    assert_eq!(compare_depth(2), 1);
    assert_eq!(index_bits(10), 4);
    let h = common::random_hard(&common::spec(30, 40, 2, 10, 1));
    let nl = build_netlist(&h, &PipelinePlan::default()).unwrap();
    assert_eq!(nl.compare_count(), 9);
    assert_eq!(nl.meta.compare_depth, 4);
    assert_eq!(nl.outputs.len(), 4);
}

#[test]
fn stage_count_matches_estimator() {
    let plan = PipelinePlan::default();
    let specs = [
        common::spec(20, 50, 1, 2, 0),
        common::spec(30, 200, 9, 10, 1),
        ArchitectureSpec::baseline(64, 1, 400, 3, 10).with_front(500).with_end(0.5),
        ArchitectureSpec::baseline(64, 1, 2000, 2, 4).with_end(0.75),
        common::spec(100, 3000, 1, 2, 3),
    ];
    for s in specs {
        let h = common::random_hard(&s);
        let raw = build_netlist(&h, &plan).unwrap();
        assert_eq!(raw.stage_count, estimate_cycles(&s, &plan), "{s:?}");
        assert_eq!(compile(&h, &plan).unwrap().stage_count, raw.stage_count);
    }
}

#[test]
fn compiled_networks_agree_with_hard_forward() {
    let plan = PipelinePlan::default();
    for seed in 0..6 {
        let s = ArchitectureSpec::baseline(50, 1, 80 + 20 * seed as usize, 1 + seed as usize % 3, 2 + seed as usize)
            .with_seed(seed);
        let h = common::random_hard(&s);
        let inputs = common::random_inputs(1000, 50, seed);
        let expected = h.predict_many(&inputs).unwrap();
        for nl in [build_netlist(&h, &plan).unwrap(), compile(&h, &plan).unwrap()] {
            nl.validate().unwrap();
            assert_eq!(simulate_many(&nl, &inputs).unwrap(), expected, "seed {seed}");
        }
    }
}

#[test]
fn ties_go_to_the_lowest_class() {
    let nl = single_gate_netlist(GateId::AND, &PipelinePlan::default()).unwrap();
    assert_eq!(simulate(&nl, &[true, true]).unwrap(), 1);
    assert_eq!(simulate(&nl, &[true, false]).unwrap(), 0);
    assert_eq!(simulate(&nl, &[false, false]).unwrap(), 0);
}

#[test]
fn stages_are_monotone_along_edges() {
    let h = common::random_hard(&ArchitectureSpec::baseline(40, 1, 120, 10, 4).with_end(0.5));
    let nl = compile(&h, &PipelinePlan::default()).unwrap();
    for n in &nl.nodes {
        for s in n.op.inputs() {
            assert!(nl.nodes[s.node as usize].stage <= n.stage);
        }
    }
    assert!(nl.nodes.iter().all(|n| n.stage < nl.stage_count));
}

#[test]
fn netlist_json_round_trips() {
    let h = common::random_hard(&common::spec(16, 30, 2, 3, 5));
    let nl = compile(&h, &PipelinePlan::default()).unwrap();
    let back = Netlist::from_json(&nl.to_json().unwrap()).unwrap();
    assert_eq!(back, nl);
    let mut v: serde_json::Value = serde_json::from_str(&nl.to_json().unwrap()).unwrap();
    v["version"] = serde_json::json!(99);
    assert!(Netlist::from_json(&v.to_string()).is_err());
}

#[test]
fn verilog_is_deterministic_and_round_trips() {
    let plan = PipelinePlan::default();
    for seed in 0..5 {
        let h = common::random_hard(&common::spec(24, 40, 1 + seed as usize, 2 + seed as usize, seed));
        let nl = compile(&h, &plan).unwrap();
        let a = emit_verilog(&nl, "top");
        assert_eq!(a, emit_verilog(&nl.clone(), "top"));
        let back = read_structural_verilog(&a).unwrap();
        assert_eq!(back.module_name, "top");
        assert_eq!(back.input_bits, nl.input_bits);
        assert_eq!(back.stage_count, nl.stage_count);
        assert!(back.matches(&nl), "seed {seed}");
    }
    let nl = compile(&common::random_hard(&common::spec(24, 40, 2, 3, 9)), &plan).unwrap();
    let other = compile(&common::random_hard(&common::spec(24, 40, 2, 3, 10)), &plan).unwrap();
    let back = read_structural_verilog(&emit_verilog(&nl, "m")).unwrap();
    assert!(!back.matches(&other));
}

#[test]
fn verilog_ports() {
    let nl = prune(&single_gate_netlist(GateId::XOR, &PipelinePlan::default()).unwrap());
    let v = emit_verilog(&nl, "xor_top");
    for port in ["input wire clk", "input wire rst", "input wire in_valid", "input wire [1:0] in_bits", "output wire out_valid", "output wire [0:0] out_class"] {
        assert!(v.contains(port), "missing {port}\n{v}");
    }
}

#[test]
fn verilog_reader_reports_lines() {
    let nl = prune(&single_gate_netlist(GateId::AND, &PipelinePlan::default()).unwrap());
    let text = emit_verilog(&nl, "m");
    let mut lines: Vec<&str> = text.lines().collect();
    let at = lines.iter().position(|l| l.trim_start().starts_with("wire ") && l.contains(" = ")).unwrap();
    lines[at] = "  wire bogus = 1'b1;";
    match read_structural_verilog(&lines.join("\n")) {
        Err(lgnkit::Error::Verilog { line, .. }) => assert_eq!(line, at + 1),
        other => panic!("{other:?}"),
    }
    assert!(read_structural_verilog("").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruning_never_grows_or_changes_outputs(seed: u64, ops in 1usize..80) {
        let nl = common::random_dag(seed, 5, ops, 2);
        let p = prune(&nl);
        prop_assert!(p.nodes.len() <= nl.nodes.len());
        let lanes = common::random_lanes(5, seed);
        prop_assert_eq!(nl.output_lanes(&nl.eval_lanes(&lanes)), p.output_lanes(&p.eval_lanes(&lanes)));
    }
}
