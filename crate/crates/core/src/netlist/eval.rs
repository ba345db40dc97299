//! Compiled, bit-sliced evaluation.
//!
//! Each wire value is a `u64` holding 64 independent evaluations (lanes).
//! Scalar evaluation is the one-lane special case.

use std::collections::HashMap;

use super::{Gate, GateKind, NetlistError};

#[derive(Debug, Clone)]
struct Op {
    kind: GateKind,
    out: usize,
    ins: Vec<usize>,
}

/// What an override does to the lanes selected by its mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverrideAction {
    Force(bool),
    Flip,
}

/// Transient value override on a gate output, applied before fan-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Override {
    pub wire: usize,
    pub mask: u64,
    pub action: OverrideAction,
}

#[derive(Debug, Clone)]
pub struct Program {
    wire_names: Vec<String>,
    index: HashMap<String, usize>,
    num_inputs: usize,
    /// Gate indices in evaluation order.
    order: Vec<usize>,
    ops: Vec<Op>,
    /// For each wire, the index of its driving gate.
    driver: Vec<Option<usize>>,
    outputs: Vec<usize>,
}

impl Program {
    pub(super) fn compile(
        inputs: &[String],
        outputs: &[String],
        gates: &[Gate],
    ) -> Result<Self, NetlistError> {
        let wire_names: Vec<String> = inputs
            .iter()
            .cloned()
            .chain(gates.iter().map(|g| g.out.clone()))
            .collect();
        let index: HashMap<String, usize> = wire_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let n_in = inputs.len();
        let mut driver = vec![None; wire_names.len()];
        for (gi, _) in gates.iter().enumerate() {
            driver[n_in + gi] = Some(gi);
        }

        // Kahn's algorithm; ties resolved by stored gate order.
        let mut pending: Vec<usize> = gates
            .iter()
            .map(|g| g.ins.iter().filter(|w| index[*w] >= n_in).count())
            .collect();
        let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
        for (gi, g) in gates.iter().enumerate() {
            for w in &g.ins {
                let wi = index[w];
                if wi >= n_in {
                    fanout[wi - n_in].push(gi);
                }
            }
        }
        let mut ready: std::collections::VecDeque<usize> =
            (0..gates.len()).filter(|&g| pending[g] == 0).collect();
        let mut order = Vec::with_capacity(gates.len());
        while let Some(g) = ready.pop_front() {
            order.push(g);
            for &succ in &fanout[g] {
                pending[succ] -= 1;
                if pending[succ] == 0 {
                    ready.push_back(succ);
                }
            }
        }
        if order.len() != gates.len() {
            let stuck = (0..gates.len())
                .find(|&g| pending[g] > 0)
                .expect("some gate left unordered");
            return Err(NetlistError::Cycle {
                wire: gates[stuck].out.clone(),
            });
        }

        let ops = order
            .iter()
            .map(|&gi| {
                let g = &gates[gi];
                Op {
                    kind: g.kind,
                    out: n_in + gi,
                    ins: g.ins.iter().map(|w| index[w]).collect(),
                }
            })
            .collect();
        let outputs = outputs.iter().map(|o| index[o]).collect();
        Ok(Self {
            wire_names,
            index,
            num_inputs: n_in,
            order,
            ops,
            driver,
            outputs,
        })
    }

    pub fn wire_names(&self) -> &[String] {
        &self.wire_names
    }

    pub fn wire_count(&self) -> usize {
        self.wire_names.len()
    }

    pub fn wire_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn output_indices(&self) -> &[usize] {
        &self.outputs
    }

    pub fn driver_gate(&self, wire: usize) -> Option<usize> {
        self.driver[wire]
    }

    /// Gate indices in a valid evaluation order.
    pub fn topo_order(&self) -> &[usize] {
        &self.order
    }

    /// Evaluates 64 lanes at once; returns every wire's word.
    pub fn eval_words(&self, inputs: &[u64]) -> Vec<u64> {
        self.eval_words_with(inputs, &[])
    }

    pub fn eval_words_with(&self, inputs: &[u64], overrides: &[Override]) -> Vec<u64> {
        assert_eq!(inputs.len(), self.num_inputs, "input word count");
        let mut vals = vec![0u64; self.wire_names.len()];
        vals[..self.num_inputs].copy_from_slice(inputs);
        for op in &self.ops {
            let v = |i: usize| vals[op.ins[i]];
            let mut out = match op.kind {
                GateKind::Not => !v(0),
                GateKind::Buf => v(0),
                GateKind::And => op.ins.iter().fold(!0, |a, &w| a & vals[w]),
                GateKind::Or => op.ins.iter().fold(0, |a, &w| a | vals[w]),
                GateKind::Nand => !op.ins.iter().fold(!0, |a, &w| a & vals[w]),
                GateKind::Nor => !op.ins.iter().fold(0, |a, &w| a | vals[w]),
                GateKind::Xor => op.ins.iter().fold(0, |a, &w| a ^ vals[w]),
                GateKind::Xnor => !op.ins.iter().fold(0, |a, &w| a ^ vals[w]),
                GateKind::Mux2 => (v(0) & v(2)) | (!v(0) & v(1)),
                GateKind::Const0 => 0,
                GateKind::Const1 => !0,
            };
            for o in overrides.iter().filter(|o| o.wire == op.out) {
                out = match o.action {
                    OverrideAction::Force(true) => out | o.mask,
                    OverrideAction::Force(false) => out & !o.mask,
                    OverrideAction::Flip => out ^ o.mask,
                };
            }
            vals[op.out] = out;
        }
        vals
    }

    /// Single evaluation; returns every wire's bit.
    pub fn eval_bits(&self, inputs: &[bool]) -> Vec<bool> {
        self.eval_bits_with(inputs, &[])
    }

    pub fn eval_bits_with(&self, inputs: &[bool], overrides: &[Override]) -> Vec<bool> {
        let words: Vec<u64> = inputs.iter().map(|&b| b as u64).collect();
        self.eval_words_with(&words, overrides)
            .into_iter()
            .map(|w| w & 1 == 1)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{wires, Gate, GateKind, Netlist};
    use super::*;

    #[test]
    fn lanes_are_independent() {
        let n = Netlist::new(
            "m",
            wires(&["s", "a", "b"]),
            wires(&["y"]),
            vec![Gate::new(GateKind::Mux2, "y", wires(&["s", "a", "b"]))],
        )
        .unwrap();
        let p = n.program();
        let vals = p.eval_words(&[0b1100, 0b1010, 0b0110]);
        let y = vals[p.wire_index("y").unwrap()] & 0xF;
        // lane i: s?b:a
        assert_eq!(y, 0b0110 & 0b1100 | 0b1010 & !0b1100 & 0xF);
    }

    #[test]
    fn overrides_propagate() {
        let n = Netlist::new(
            "c",
            wires(&["a"]),
            wires(&["z"]),
            vec![
                Gate::new(GateKind::Not, "y", wires(&["a"])),
                Gate::new(GateKind::Not, "z", wires(&["y"])),
            ],
        )
        .unwrap();
        let p = n.program();
        let y = p.wire_index("y").unwrap();
        let z = p.wire_index("z").unwrap();
        let vals = p.eval_bits_with(
            &[true],
            &[Override {
                wire: y,
                mask: 1,
                action: OverrideAction::Flip,
            }],
        );
        assert!(vals[y]);
        assert!(!vals[z]);
    }
}
