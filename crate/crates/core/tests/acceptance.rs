//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use record_core::cost::{area, cost_report, depth, CostModel};
use record_core::demo::{run_demo, ImageDemoConfig, Variant};
use record_core::ftrecord::{ft_simulate, transform_ft, FaultPlan, FaultValue, FtStatus};
use record_core::netlist::{fixtures, Netlist, Zone};
use record_core::recordize::{
    chip_view, partition_check, rekey, transform, Grouping, PartitionedDesign, RecordConfig,
};
use record_core::sim::{simulate, simulate_netlist, verify_equivalence, CheckMode, RngSpec, Stimulus, Verdict};
use record_core::trojan::{
    exhaustive_fire_rate, input_pairs, leak_report, mutual_information, tap, trigger_experiment,
    Isolation, TriggerSpec,
};

type Outcome = Result<String, String>;

fn design(n: &Netlist, groups: usize) -> PartitionedDesign {
    let cfg = RecordConfig::for_netlist(n, None, groups, &Grouping::Checkerboard).expect("config");
    transform(n, &cfg).expect("transform")
}

fn fixture_set() -> Vec<Netlist> {
    vec![
        fixtures::inverter(),
        fixtures::and_tree(2).expect("and2"),
        fixtures::adder4(),
        fixtures::maj9(),
        fixtures::aes_sbox(),
    ]
}

fn exhaustive(n: &Netlist, d: &PartitionedDesign) -> Result<u64, String> {
    match verify_equivalence(n, d, CheckMode::Exhaustive).map_err(|e| e.to_string())? {
        Verdict::Pass { cases } => Ok(cases),
        Verdict::Fail(c) => Err(format!("{}: {c}", n.name())),
    }
}

fn c1_single_bit_equivalence() -> Outcome {
    let mut total = 0;
    for n in fixture_set() {
        total += exhaustive(&n, &design(&n, 1))?;
    }
    Ok(format!("5 fixtures, {total} cases"))
}

fn c2_two_bit_equivalence() -> Outcome {
    let mut total = 0;
    for n in [fixtures::maj9(), fixtures::aes_sbox()] {
        let d = design(&n, 2);
        let cases = exhaustive(&n, &d)?;
        let want = 1u64 << (n.inputs().len() + 2);
        if cases != want {
            return Err(format!("{}: {cases} cases, expected {want}", n.name()));
        }
        total += cases;
    }
    Ok(format!("maj9 + aes-sbox, {total} cases"))
}

fn c3_one_time_pad() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, g) in [(fixtures::maj9(), 1), (fixtures::maj9(), 2), (fixtures::aes_sbox(), 1)] {
        let d = design(&n, g);
        let t = simulate(&d, &Stimulus::random(100_000, 17), RngSpec::new(18)).map_err(|e| e.to_string())?;
        for k in 0..d.replica_count() {
            let ports = d.replica(k).expect("replica");
            for (x, ti) in d.source_inputs().iter().zip(&ports.inputs) {
                let mi = mutual_information(t.column(ti).unwrap(), t.column(x).unwrap())
                    .map_err(|e| e.to_string())?;
                if mi >= 0.01 {
                    return Err(format!("{} G={g}: MI({ti}; {x}) = {mi:.5}", n.name()));
                }
                worst = worst.max(mi);
            }
        }
    }
    Ok(format!("max MI {worst:.2e} bits over every replica input"))
}

fn c4_residual_leak() -> Outcome {
    let n = fixtures::maj9();
    let stim = Stimulus::random(100_000, 21);
    let d1 = design(&n, 1);
    let t1 = simulate(&d1, &stim, RngSpec::new(22)).map_err(|e| e.to_string())?;
    let same = input_pairs(&d1, true);
    let r1 = leak_report(&d1, &t1, &same).map_err(|e| e.to_string())?;
    let min_same = r1.pairs.iter().map(|p| p.mi).fold(f64::INFINITY, f64::min);
    if same.len() != 36 || min_same <= 0.99 {
        return Err(format!("{} same-group pairs, min MI {min_same:.4}", same.len()));
    }
    let d2 = design(&n, 2);
    let t2 = simulate(&d2, &stim, RngSpec::new(23)).map_err(|e| e.to_string())?;
    let cross = input_pairs(&d2, false);
    let r2 = leak_report(&d2, &t2, &cross).map_err(|e| e.to_string())?;
    let max_cross = r2.pairs.iter().map(|p| p.mi).fold(0.0, f64::max);
    if cross.is_empty() || max_cross >= 0.01 {
        return Err(format!("{} cross-group pairs, max MI {max_cross:.4}", cross.len()));
    }
    Ok(format!("G=1 same-group min {min_same:.4}; G=2 cross-group max {max_cross:.2e}"))
}

fn c5_partition_closure() -> Outcome {
    let mut designs = 0;
    for n in fixture_set() {
        for g in 1..=2.min(n.inputs().len()) {
            let d = design(&n, g);
            let r = partition_check(&d);
            if !r.passed() {
                return Err(format!("{} G={g}: {}", n.name(), r.violations[0]));
            }
            designs += 1;
            // Hand-wire __r1 into the first replica gate with an input.
            let mut gates = d.netlist().gates().to_vec();
            let victim = gates
                .iter()
                .position(|g| g.zone == Zone::Untrusted && !g.ins.is_empty())
                .expect("replica gate");
            gates[victim].ins[0] = "__r1".to_string();
            let m = d.netlist();
            let mutated = Netlist::new(m.name(), m.inputs().to_vec(), m.outputs().to_vec(), gates)
                .map_err(|e| e.to_string())?;
            let md = PartitionedDesign::from_netlist(mutated).map_err(|e| e.to_string())?;
            let count = partition_check(&md).violations.len();
            if count != 1 {
                return Err(format!("{} G={g}: mutation gave {count} violations", n.name()));
            }
        }
    }
    Ok(format!("{designs} designs clean, each mutation flagged once"))
}

fn c6_fault_tolerance() -> Outcome {
    let n = fixtures::maj9();
    let d = transform_ft(&n, &RecordConfig::single(&n)).map_err(|e| e.to_string())?;
    let stim = Stimulus::random(100, 31);
    let rng = RngSpec::new(32);
    let reference = simulate_netlist(&n, &stim).map_err(|e| e.to_string())?;
    let want = reference.column("maj").unwrap().clone();
    let sites: Vec<String> = d.fault_sites().map(str::to_string).collect();
    let mut campaigns = 0;
    let mut masked_by_replay = 0;
    for replica in 0..3 {
        for (i, wire) in sites.iter().enumerate() {
            for value in [FaultValue::Flip, FaultValue::Force(false), FaultValue::Force(true)] {
                let cycle = (replica * 31 + i * 7 + campaigns) % 100;
                let plan = FaultPlan::single(cycle, replica, wire.clone(), value);
                let t = ft_simulate(&d, &stim, rng, &plan).map_err(|e| e.to_string())?;
                if t.committed_stream()[0] != want || t.status != FtStatus::Ok {
                    return Err(format!("replica {replica}, wire {wire}, cycle {cycle}, {value:?}"));
                }
                masked_by_replay += t.replays();
                campaigns += 1;
            }
        }
    }
    let clean = ft_simulate(&d, &Stimulus::random(10_000, 33), RngSpec::new(34), &FaultPlan::none())
        .map_err(|e| e.to_string())?;
    if clean.steps.iter().any(|s| s.e) {
        return Err("e rose in a fault-free run".into());
    }
    Ok(format!(
        "{campaigns} campaigns correct ({masked_by_replay} replays); 10^4 fault-free cycles never flagged"
    ))
}

fn c7_trigger() -> Outcome {
    let n = fixtures::maj9();
    let pattern = vec![true, false, true, true, false, false, true, false, true];
    let mut notes = Vec::new();
    for (g, expected) in [(1, 0.5), (2, 0.25)] {
        let d = design(&n, g);
        let trig = TriggerSpec::full_bus(&d, pattern.clone()).map_err(|e| e.to_string())?;
        let enumerated = exhaustive_fire_rate(&d, &trig, &pattern).map_err(|e| e.to_string())?;
        if enumerated != expected {
            return Err(format!("G={g}: enumeration gives {enumerated}, expected {expected}"));
        }
        let s = trigger_experiment(&d, &trig, &Stimulus::constant(pattern.clone(), 10_000), RngSpec::new(40 + g as u64))
            .map_err(|e| e.to_string())?;
        if s.analytic_rate != enumerated || !s.within_sigmas(3.0) {
            return Err(format!("G={g}: rate {} vs {enumerated} (sigma {:.4})", s.rate, s.sigma()));
        }
        notes.push(format!("G={g} {:.4} vs {enumerated}", s.rate));
    }
    Ok(notes.join(", "))
}

fn c8_cost() -> Outcome {
    let m = CostModel::default();
    let aes = fixtures::aes_sbox();
    let d = design(&aes, 1);
    let stim = Stimulus::random(4096, 51);
    let to = simulate_netlist(&aes, &stim).map_err(|e| e.to_string())?;
    let td = simulate(&d, &stim, RngSpec::new(52)).map_err(|e| e.to_string())?;
    let report = cost_report(&aes, &d, &to, &td, &m).map_err(|e| e.to_string())?;
    let ratio = report.ratios.area;
    if !(2.0..=3.0).contains(&ratio) {
        return Err(format!("aes-sbox G=1 area ratio {ratio:.3}"));
    }
    for n in fixture_set() {
        for g in 1..=2.min(n.inputs().len()) {
            let dg = design(&n, g);
            let untrusted = area(dg.netlist(), &m, Some(Zone::Untrusted));
            let base = area(&n, &m, None);
            if untrusted != base * (1u64 << g) as f64 {
                return Err(format!("{} G={g}: untrusted {untrusted} vs base {base}", n.name()));
            }
            let delta = depth(&chip_view(&dg), &m) - depth(&n, &m);
            if delta != (2 + g) as f64 {
                return Err(format!("{} G={g}: depth delta {delta}", n.name()));
            }
        }
    }
    Ok(format!(
        "aes area {ratio:.2}x, activity {:.2}x, delay +{:.0}% (last two not gated)",
        report.ratios.activity,
        report.ratios.delay_increase * 100.0
    ))
}

fn c9_image_demo() -> Outcome {
    let mut worst_f1: f64 = 1.0;
    let (mut lo, mut hi) = (1.0f64, 0.0f64);
    for seed in 0..10 {
        let run = |variant| {
            run_demo(&ImageDemoConfig {
                variant,
                seed,
                ..ImageDemoConfig::default()
            })
            .map_err(|e| e.to_string())
        };
        let (p, r1, r2) = (run(Variant::Plain)?, run(Variant::Record1)?, run(Variant::Record2)?);
        if !(p.structural_score > r1.structural_score && r1.structural_score > r2.structural_score) {
            return Err(format!(
                "seed {seed}: scores {:.3} / {:.3} / {:.3}",
                p.structural_score, r1.structural_score, r2.structural_score
            ));
        }
        if r1.edge_f1 <= 0.8 {
            return Err(format!("seed {seed}: record1 edge F1 {:.3}", r1.edge_f1));
        }
        let cross = r2.cross_group_accuracy.ok_or("record2 has no cross-group accuracy")?;
        if !(0.45..=0.55).contains(&cross) {
            return Err(format!("seed {seed}: cross-group accuracy {cross:.4}"));
        }
        if ![&p, &r1, &r2].iter().all(|r| r.oracle_match) {
            return Err(format!("seed {seed}: enhanced image differs from the median oracle"));
        }
        worst_f1 = worst_f1.min(r1.edge_f1);
        lo = lo.min(cross);
        hi = hi.max(cross);
    }
    Ok(format!(
        "10 seeds ordered; min record1 F1 {worst_f1:.3}; cross-group accuracy {lo:.4}..{hi:.4}"
    ))
}

fn c10_rekey() -> Outcome {
    let n = fixtures::maj9();
    let d = design(&n, 2);
    let e = rekey(&d, RngSpec::new(d.rng().seed.wrapping_add(1)));
    if d.untrusted_zone_text() != e.untrusted_zone_text() {
        return Err("untrusted zone changed".into());
    }
    let stim = Stimulus::random(10_000, 61);
    let ta = simulate(&d, &stim, d.rng()).map_err(|e| e.to_string())?;
    let tb = simulate(&e, &stim, e.rng()).map_err(|e| e.to_string())?;
    for z in d.decoded_outputs() {
        if ta.column(z) != tb.column(z) {
            return Err(format!("decoded output {z} changed"));
        }
    }
    let la = tap(&d, &ta, Isolation::All).map_err(|e| e.to_string())?;
    let lb = tap(&e, &tb, Isolation::All).map_err(|e| e.to_string())?;
    if la == lb {
        return Err("leak trace unchanged by rekey".into());
    }
    let differing = la.wires().iter().filter(|w| la.column(w).ok() != lb.column(w).ok()).count();
    Ok(format!("{differing} of {} tapped wires differ; outputs and untrusted zone identical", la.wires().len()))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 equivalence, one random bit", c1_single_bit_equivalence, Duration::from_secs(1)),
        ("2 equivalence, two random bits", c2_two_bit_equivalence, Duration::from_secs(5)),
        ("3 one-time pad", c3_one_time_pad, Duration::from_secs(30)),
        ("4 residual pair leak", c4_residual_leak, Duration::from_secs(30)),
        ("5 partition closure", c5_partition_closure, Duration::from_secs(30)),
        ("6 fault tolerance", c6_fault_tolerance, Duration::from_secs(120)),
        ("7 trigger disruption", c7_trigger, Duration::from_secs(30)),
        ("8 cost proxies", c8_cost, Duration::from_secs(30)),
        ("9 image demo", c9_image_demo, Duration::from_secs(60)),
        ("10 rekey", c10_rekey, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(note) if took > budget => Err(format!("{note}; took {took:.2?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(note) => println!("PASS  {name}: {note} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
