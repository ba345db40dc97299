mod common;

use common::truth_table;
use record_core::bits::bits_msb_first;
use record_core::cost::{depth, CostModel};
use record_core::ftrecord::{ft_simulate, transform_ft, FaultPlan, FaultValue, FtStatus};
use record_core::netlist::{fixtures, parse_netlist, write_netlist, Netlist};
use record_core::recordize::{
    chip_view, partition_check, rekey, transform, user_view, Grouping, PartitionedDesign, RecordConfig,
};
use record_core::sim::{random_columns, simulate, simulate_netlist, verify_equivalence, CheckMode, RngSpec, Stimulus};
use record_core::trojan::{input_pairs, leak_report, tap, Isolation};

fn design(n: &Netlist, groups: usize) -> PartitionedDesign {
    transform(n, &RecordConfig::for_netlist(n, None, groups, &Grouping::Checkerboard).unwrap()).unwrap()
}

fn all_fixtures() -> Vec<Netlist> {
    vec![
        fixtures::inverter(),
        fixtures::and_tree(2).unwrap(),
        fixtures::adder4(),
        fixtures::maj9(),
        fixtures::aes_sbox(),
    ]
}

#[test]
fn fixtures_match_reference_functions() {
    let maj = truth_table(&fixtures::maj9());
    for (v, row) in maj.iter().enumerate() {
        assert_eq!(row[0], (v as u32).count_ones() >= 5, "maj9({v:09b})");
    }
    let add = truth_table(&fixtures::adder4());
    for (v, row) in add.iter().enumerate() {
        let sum = (v >> 4) + (v & 15);
        assert_eq!(row, &bits_msb_first(sum as u64, 5), "adder4({v:08b})");
    }
    let sbox = fixtures::aes_sbox_table();
    assert_eq!((sbox[0x00], sbox[0x53], sbox[0xff]), (0x63, 0xed, 0x16));
    let aes = truth_table(&fixtures::aes_sbox());
    for (v, row) in aes.iter().enumerate() {
        assert_eq!(row, &bits_msb_first(sbox[v] as u64, 8), "sbox({v:#04x})");
    }
}

#[test]
fn maj9_is_self_dual() {
    let n = fixtures::maj9();
    for v in 0..512u64 {
        let a = n.evaluate_bits(&bits_msb_first(v, 9)).unwrap();
        let b = n.evaluate_bits(&bits_msb_first(!v & 511, 9)).unwrap();
        assert_eq!(a[0], !b[0]);
    }
}

#[test]
fn self_dual_replicas_are_complementary() {
    let d = design(&fixtures::maj9(), 1);
    let t = simulate(&d, &Stimulus::random(2000, 5), RngSpec::new(6)).unwrap();
    let o0 = t.column(d.replica_output(0, "maj").unwrap()).unwrap();
    let o1 = t.column(d.replica_output(1, "maj").unwrap()).unwrap();
    assert_eq!(o0.not(), *o1);
}

#[test]
fn every_fixture_transforms_cleanly() {
    for n in all_fixtures() {
        for g in [1, 2] {
            if n.inputs().len() < g {
                continue;
            }
            let d = design(&n, g);
            assert!(partition_check(&d).passed(), "{}", n.name());
            let mode = if n.inputs().len() + g <= 12 {
                CheckMode::Exhaustive
            } else {
                CheckMode::Sampled { samples: 4096, seed: 1 }
            };
            assert!(verify_equivalence(&n, &d, mode).unwrap().passed(), "{} G={g}", n.name());
            let back = parse_netlist(&write_netlist(d.netlist())).unwrap();
            assert_eq!(&back, d.netlist());
        }
    }
}

#[test]
fn depth_law_on_fixtures() {
    let m = CostModel::default();
    for n in all_fixtures() {
        for g in [1, 2] {
            if n.inputs().len() < g {
                continue;
            }
            let delta = depth(&chip_view(&design(&n, g)), &m) - depth(&n, &m);
            assert_eq!(delta, (2 + g) as f64, "{} G={g}", n.name());
        }
    }
}

#[test]
fn subset_keeps_plain_inputs_trusted() {
    let n = fixtures::adder4();
    let subset: Vec<String> = ["a0", "b3"].map(String::from).to_vec();
    let cfg = RecordConfig::for_netlist(&n, Some(&subset), 1, &Grouping::Checkerboard).unwrap();
    let d = transform(&n, &cfg).unwrap();
    assert!(verify_equivalence(&n, &d, CheckMode::Exhaustive).unwrap().passed());
    assert!(partition_check(&d).passed());
    // plain inputs feed the replicas directly; randomized ones only encoded
    assert_eq!(d.replica_input(0, "a1"), Some("a1"));
    assert_ne!(d.replica_input(0, "a0"), Some("a0"));
}

#[test]
fn random_bit_is_balanced() {
    let r = &random_columns(RngSpec::new(11), 1, 10_000)[0];
    let p = r.count_ones() as f64 / 10_000.0;
    assert!((0.47..=0.53).contains(&p), "P(r1) = {p}");
}

#[test]
fn rekey_changes_what_leaks_but_not_outputs() {
    let n = fixtures::maj9();
    let d = design(&n, 1);
    let e = rekey(&d, RngSpec::new(d.rng().seed + 99));
    let stim = Stimulus::random(1000, 2);
    let (ta, tb) = (simulate(&d, &stim, d.rng()).unwrap(), simulate(&e, &stim, e.rng()).unwrap());
    for z in d.decoded_outputs() {
        assert_eq!(ta.column(z), tb.column(z));
    }
    assert_ne!(tap(&d, &ta, Isolation::All).unwrap(), tap(&e, &tb, Isolation::All).unwrap());
    assert_eq!(d.netlist(), e.netlist());
}

#[test]
fn user_view_matches_plain_simulation() {
    let n = fixtures::adder4();
    let d = design(&n, 2);
    let u = user_view(&d);
    assert!(u.outputs().iter().all(|o| o.starts_with("__z.")));
    let stim = Stimulus::random(300, 4);
    let t = simulate(&d, &stim, RngSpec::new(8)).unwrap();
    let p = simulate_netlist(&n, &stim).unwrap();
    for (o, z) in n.outputs().iter().zip(d.decoded_outputs()) {
        assert_eq!(p.column(o), t.column(z));
    }
}

#[test]
fn leak_report_on_maj9() {
    let d = design(&fixtures::maj9(), 2);
    let t = simulate(&d, &Stimulus::random(20_000, 3), RngSpec::new(4)).unwrap();
    let pairs: Vec<_> = input_pairs(&d, true).into_iter().chain(input_pairs(&d, false)).collect();
    let r = leak_report(&d, &t, &pairs).unwrap();
    for w in r.wires.values() {
        for mi in w.mi_vs.input.values().chain(w.mi_vs.output.values()) {
            assert!(*mi < 0.01, "{mi}");
        }
    }
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert!(json["pairs"].as_array().unwrap().len() == 36);
}

#[test]
fn ft_run_recovers_every_cycle() {
    let n = fixtures::maj9();
    let d = transform_ft(&n, &RecordConfig::single(&n)).unwrap();
    let stim = Stimulus::random(200, 9);
    let plain = simulate_netlist(&n, &stim).unwrap();
    let plan = FaultPlan::single(50, 1, "maj", FaultValue::Flip);
    let t = ft_simulate(&d, &stim, RngSpec::new(10), &plan).unwrap();
    assert_eq!(t.status, FtStatus::Ok);
    assert_eq!(t.committed_stream()[0], *plain.column("maj").unwrap());
}
