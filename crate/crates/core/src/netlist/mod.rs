//! Combinational netlist IR.
//!
//! A [`Netlist`] is an ordered list of single-output gates over named wires.
//! Construction validates the single-driver rule, gate arities, wire names
//! and acyclicity, and precomputes a topologically ordered program used by
//! every evaluator in the crate. Values are immutable once built.

mod eval;
pub mod fixtures;
mod parse;
pub(crate) mod write;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{Override, OverrideAction, Program};
pub use parse::parse_netlist;
pub use write::write_netlist;

/// Prefix reserved for wires introduced by the transform.
pub const RESERVED_PREFIX: &str = "__";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("wire `{wire}` has more than one driver")]
    DuplicateDriver { wire: String },
    #[error("wire `{wire}` is read but never driven")]
    Undriven { wire: String },
    #[error("`{kind}` gate driving `{wire}` expects {expected} inputs, got {got}")]
    BadArity {
        wire: String,
        kind: GateKind,
        expected: &'static str,
        got: usize,
    },
    #[error("combinational cycle through wire `{wire}`")]
    Cycle { wire: String },
    #[error("invalid wire name `{0}`")]
    BadName(String),
    #[error("no value for input `{0}`")]
    MissingInput(String),
    #[error("expected {expected} input values, got {got}")]
    InputWidth { expected: usize, got: usize },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<NetlistError>,
    },
}

impl NetlistError {
    /// The underlying error with any line annotation stripped.
    pub fn root(&self) -> &NetlistError {
        match self {
            NetlistError::AtLine { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            NetlistError::AtLine { line, .. } | NetlistError::Syntax { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Not,
    Buf,
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    #[serde(rename = "mux")]
    Mux2,
    Const0,
    Const1,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::Not,
        GateKind::Buf,
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Mux2,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::Not => "not",
            GateKind::Buf => "buf",
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Nand => "nand",
            GateKind::Nor => "nor",
            GateKind::Xor => "xor",
            GateKind::Xnor => "xnor",
            GateKind::Mux2 => "mux",
            GateKind::Const0 => "const0",
            GateKind::Const1 => "const1",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Mux2 => n == 3,
            GateKind::Const0 | GateKind::Const1 => n == 0,
            _ => n >= 2,
        }
    }

    fn arity_text(self) -> &'static str {
        match self {
            GateKind::Not | GateKind::Buf => "exactly 1",
            GateKind::Mux2 => "exactly 3 (sel a0 a1)",
            GateKind::Const0 | GateKind::Const1 => "no",
            _ => "at least 2",
        }
    }

    /// Truth function over plain bits.
    pub fn apply(self, ins: &[bool]) -> bool {
        match self {
            GateKind::Not => !ins[0],
            GateKind::Buf => ins[0],
            GateKind::And => ins.iter().all(|&b| b),
            GateKind::Or => ins.iter().any(|&b| b),
            GateKind::Nand => !ins.iter().all(|&b| b),
            GateKind::Nor => !ins.iter().any(|&b| b),
            GateKind::Xor => ins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Xnor => !ins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Mux2 => {
                if ins[0] {
                    ins[2]
                } else {
                    ins[1]
                }
            }
            GateKind::Const0 => false,
            GateKind::Const1 => true,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.keyword() == s)
            .ok_or(())
    }
}

/// Manufacturing zone of a gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    #[default]
    Trusted,
    Untrusted,
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Zone::Trusted => "trusted",
            Zone::Untrusted => "untrusted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub out: String,
    /// Input wires; for `Mux2` the order is `sel, a0, a1`.
    pub ins: Vec<String>,
    pub zone: Zone,
    pub replica: Option<u32>,
}

impl Gate {
    pub fn new(kind: GateKind, out: impl Into<String>, ins: Vec<String>) -> Self {
        Self {
            kind,
            out: out.into(),
            ins,
            zone: Zone::Trusted,
            replica: None,
        }
    }

    pub fn untrusted(mut self, replica: u32) -> Self {
        self.zone = Zone::Untrusted;
        self.replica = Some(replica);
        self
    }
}

/// Convenience for building gate input lists from string slices.
pub fn wires<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    names.iter().map(|s| s.as_ref().to_string()).collect()
}

pub fn is_valid_wire_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// A validated combinational netlist.
#[derive(Clone)]
pub struct Netlist {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<Gate>,
    program: Program,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.gates == other.gates
    }
}

impl Eq for Netlist {}

impl fmt::Debug for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Netlist")
            .field("name", &self.name)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("gates", &self.gates.len())
            .finish()
    }
}

impl Netlist {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        gates: Vec<Gate>,
    ) -> Result<Self, NetlistError> {
        let name = name.into();
        if !is_valid_wire_name(&name) {
            return Err(NetlistError::BadName(name));
        }
        let mut driven: HashSet<&str> = HashSet::new();
        for w in &inputs {
            if !is_valid_wire_name(w) {
                return Err(NetlistError::BadName(w.clone()));
            }
            if !driven.insert(w) {
                return Err(NetlistError::DuplicateDriver { wire: w.clone() });
            }
        }
        for g in &gates {
            if !is_valid_wire_name(&g.out) {
                return Err(NetlistError::BadName(g.out.clone()));
            }
            if !g.kind.arity_ok(g.ins.len()) {
                return Err(NetlistError::BadArity {
                    wire: g.out.clone(),
                    kind: g.kind,
                    expected: g.kind.arity_text(),
                    got: g.ins.len(),
                });
            }
            if !driven.insert(&g.out) {
                return Err(NetlistError::DuplicateDriver {
                    wire: g.out.clone(),
                });
            }
        }
        for g in &gates {
            for w in &g.ins {
                if !driven.contains(w.as_str()) {
                    return Err(NetlistError::Undriven { wire: w.clone() });
                }
            }
        }
        for w in &outputs {
            if !driven.contains(w.as_str()) {
                return Err(NetlistError::Undriven { wire: w.clone() });
            }
        }
        let program = Program::compile(&inputs, &outputs, &gates)?;
        Ok(Self {
            name,
            inputs,
            outputs,
            gates,
            program,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Gate driving `wire`, if any (primary inputs have none).
    pub fn driver(&self, wire: &str) -> Option<&Gate> {
        self.program
            .wire_index(wire)
            .and_then(|i| self.program.driver_gate(i))
            .map(|g| &self.gates[g])
    }

    pub fn has_wire(&self, wire: &str) -> bool {
        self.program.wire_index(wire).is_some()
    }

    /// All wire names: inputs first, then gate outputs in stored order.
    pub fn wire_names(&self) -> &[String] {
        self.program.wire_names()
    }

    /// Same structure with a different output list.
    pub fn with_outputs(&self, outputs: Vec<String>) -> Result<Netlist, NetlistError> {
        Netlist::new(
            self.name.clone(),
            self.inputs.clone(),
            outputs,
            self.gates.clone(),
        )
    }

    /// Drops gates that no output depends on.
    pub fn pruned(&self) -> Netlist {
        let mut live: HashSet<&str> = self.outputs.iter().map(String::as_str).collect();
        for &op in self.program.topo_order().iter().rev() {
            let g = &self.gates[op];
            if live.contains(g.out.as_str()) {
                live.extend(g.ins.iter().map(String::as_str));
            }
        }
        let gates = self
            .gates
            .iter()
            .filter(|g| live.contains(g.out.as_str()))
            .cloned()
            .collect();
        Netlist::new(
            self.name.clone(),
            self.inputs.clone(),
            self.outputs.clone(),
            gates,
        )
        .expect("pruning keeps a valid netlist valid")
    }

    /// Evaluates outputs under an assignment covering every primary input.
    pub fn evaluate(&self, a: &Assignment) -> Result<Assignment, NetlistError> {
        let all = self.evaluate_all(a)?;
        Ok(Assignment(
            self.outputs
                .iter()
                .map(|o| (o.clone(), all.0[o]))
                .collect(),
        ))
    }

    /// Full wire valuation.
    pub fn evaluate_all(&self, a: &Assignment) -> Result<Assignment, NetlistError> {
        let bits = self
            .inputs
            .iter()
            .map(|w| a.get(w).ok_or_else(|| NetlistError::MissingInput(w.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let vals = self.program.eval_bits(&bits);
        Ok(Assignment(
            self.program
                .wire_names()
                .iter()
                .cloned()
                .zip(vals)
                .collect(),
        ))
    }

    /// Positional evaluation: input bits in declared order, outputs likewise.
    pub fn evaluate_bits(&self, bits: &[bool]) -> Result<Vec<bool>, NetlistError> {
        if bits.len() != self.inputs.len() {
            return Err(NetlistError::InputWidth {
                expected: self.inputs.len(),
                got: bits.len(),
            });
        }
        let vals = self.program.eval_bits(bits);
        Ok(self
            .program
            .output_indices()
            .iter()
            .map(|&i| vals[i])
            .collect())
    }
}

/// Wire name to bit mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(pub BTreeMap<String, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits<S: AsRef<str>>(names: &[S], bits: &[bool]) -> Self {
        Self(
            names
                .iter()
                .zip(bits)
                .map(|(n, &b)| (n.as_ref().to_string(), b))
                .collect(),
        )
    }

    pub fn set(&mut self, wire: impl Into<String>, v: bool) {
        self.0.insert(wire.into(), v);
    }

    pub fn get(&self, wire: &str) -> Option<bool> {
        self.0.get(wire).copied()
    }

    /// Values of `names` in order; missing names read as `None`.
    pub fn bits<S: AsRef<str>>(&self, names: &[S]) -> Option<Vec<bool>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and2() -> Netlist {
        Netlist::new(
            "and2",
            wires(&["a", "b"]),
            wires(&["y"]),
            vec![Gate::new(GateKind::And, "y", wires(&["a", "b"]))],
        )
        .unwrap()
    }

    #[test]
    fn and_truth_table() {
        let n = and2();
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let out = n
                .evaluate(&Assignment::from_bits(&["a", "b"], &[a, b]))
                .unwrap();
            assert_eq!(out.get("y"), Some(a && b));
        }
    }

    #[test]
    fn missing_input_is_reported() {
        let err = and2()
            .evaluate(&Assignment::from_bits(&["a"], &[true]))
            .unwrap_err();
        assert_eq!(err, NetlistError::MissingInput("b".into()));
    }

    #[test]
    fn mux_selects_a1_when_sel_high() {
        assert!(GateKind::Mux2.apply(&[true, false, true]));
        assert!(!GateKind::Mux2.apply(&[false, false, true]));
    }

    #[test]
    fn multi_input_xor_is_parity() {
        assert!(GateKind::Xor.apply(&[true, true, true]));
        assert!(!GateKind::Xnor.apply(&[true, false, false]));
    }

    #[test]
    fn arity_checked() {
        let err = Netlist::new(
            "bad",
            wires(&["a"]),
            wires(&["y"]),
            vec![Gate::new(GateKind::And, "y", wires(&["a"]))],
        )
        .unwrap_err();
        assert!(matches!(err, NetlistError::BadArity { .. }));
    }

    #[test]
    fn input_cannot_also_be_gate_driven() {
        let err = Netlist::new(
            "bad",
            wires(&["a"]),
            wires(&["a"]),
            vec![Gate::new(GateKind::Const0, "a", vec![])],
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::DuplicateDriver { wire: "a".into() });
    }

    #[test]
    fn undriven_output() {
        let err = Netlist::new("n", wires(&["a"]), wires(&["q"]), vec![]).unwrap_err();
        assert_eq!(err, NetlistError::Undriven { wire: "q".into() });
    }

    #[test]
    fn wire_name_rules() {
        assert!(is_valid_wire_name("_a.b9"));
        assert!(is_valid_wire_name("__rep0.g1"));
        assert!(!is_valid_wire_name("9a"));
        assert!(!is_valid_wire_name("a-b"));
        assert!(!is_valid_wire_name(""));
    }

    #[test]
    fn pruned_drops_dead_logic() {
        let n = Netlist::new(
            "n",
            wires(&["a", "b"]),
            wires(&["y"]),
            vec![
                Gate::new(GateKind::Or, "dead", wires(&["a", "b"])),
                Gate::new(GateKind::And, "y", wires(&["a", "b"])),
            ],
        )
        .unwrap();
        assert_eq!(n.pruned().gates().len(), 1);
    }
}
