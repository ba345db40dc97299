#![allow(dead_code)]

use proptest::prelude::*;
use record_core::netlist::{Gate, GateKind, Netlist};

/// Truth table of a netlist computed one vector at a time through the
/// scalar gate functions, independent of the bit-sliced evaluator.
pub fn truth_table(n: &Netlist) -> Vec<Vec<bool>> {
    use std::collections::HashMap;
    let k = n.inputs().len();
    (0..1u64 << k)
        .map(|v| {
            let mut val: HashMap<&str, bool> = HashMap::new();
            for (i, x) in n.inputs().iter().enumerate() {
                val.insert(x, v >> (k - 1 - i) & 1 == 1);
            }
            // Gates may be listed in any order; sweep until all are resolved.
            let mut left: Vec<&Gate> = n.gates().iter().collect();
            while !left.is_empty() {
                left.retain(|g| {
                    let ins: Option<Vec<bool>> = g.ins.iter().map(|w| val.get(w.as_str()).copied()).collect();
                    match ins {
                        Some(ins) => {
                            val.insert(&g.out, g.kind.apply(&ins));
                            false
                        }
                        None => true,
                    }
                });
            }
            n.outputs().iter().map(|o| val[o.as_str()]).collect()
        })
        .collect()
}

fn gate_strategy(avail: usize) -> impl Strategy<Value = (GateKind, Vec<usize>)> {
    let kinds = prop::sample::select(GateKind::ALL.to_vec());
    (kinds, prop::collection::vec(0..avail, 3)).prop_flat_map(move |(kind, picks)| {
        let arity = match kind {
            GateKind::Not | GateKind::Buf => Just(1).boxed(),
            GateKind::Mux2 => Just(3).boxed(),
            GateKind::Const0 | GateKind::Const1 => Just(0).boxed(),
            _ => (2usize..=3).boxed(),
        };
        arity.prop_map(move |a| (kind, picks[..a].to_vec()))
    })
}

/// Random acyclic netlist with `inputs` inputs, up to `max_gates` gates and
/// one or two outputs.
pub fn arb_netlist(inputs: std::ops::RangeInclusive<usize>, max_gates: usize) -> impl Strategy<Value = Netlist> {
    (inputs, 1..=max_gates)
        .prop_flat_map(|(ni, ng)| {
            let gates: Vec<_> = (0..ng).map(|i| gate_strategy(ni + i)).collect();
            (Just(ni), gates, any::<bool>())
        })
        .prop_map(|(ni, specs, two)| {
            let mut names: Vec<String> = (0..ni).map(|i| format!("x{i}")).collect();
            let mut gates = Vec::new();
            for (i, (kind, ins)) in specs.into_iter().enumerate() {
                let out = format!("w{i}");
                gates.push(Gate::new(kind, out.clone(), ins.iter().map(|&j| names[j].clone()).collect()));
                names.push(out);
            }
            let ng = gates.len();
            let mut outputs = vec![format!("w{}", ng - 1)];
            if two && ng > 1 {
                outputs.push(format!("w{}", ng / 2 - usize::from(ng / 2 == ng - 1)));
                outputs.dedup();
            }
            Netlist::new("rand", names[..ni].to_vec(), outputs, gates).expect("generated netlist is valid")
        })
}
