//! The randomized-encoding transform.
//!
//! Given a netlist `f` and a [`RecordConfig`], [`transform`] builds:
//!
//! ```text
//!  x ──XOR r_g──> t ──────────────> replica 0 ──┐
//!  x ─XNOR r_g──> t̄ ─────────────> replica 1 ──┤ MUX tree ─> m ─XOR r1─> y ─XOR r1─> z
//!                      ...          replica k ──┘  (select r1..rG)
//! ```
//!
//! Replica `k` (bit `g-1` of `k` is its complement flag for group `g`) sees
//! `t_i XOR c_g(i)` on every randomized input and the raw `x_i` elsewhere.
//! The replica selected by `r` therefore sees `x` itself, so `m = f(x)` for
//! every `r`. Only the replica bodies are untrusted.
//!
//! Generated wires live in the reserved `__` namespace:
//! `__r<g>` random inputs, `__t.<x>` / `__tn.<x>` encoded inputs,
//! `__rep<k>.<w>` replica wires, `__m.<o>` selected outputs,
//! `__y.<o>` encoded outputs, `__z.<o>` decoded outputs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{
    write_netlist, Gate, GateKind, Netlist, NetlistError, Zone, RESERVED_PREFIX,
};
use crate::sim::RngSpec;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("wire `{0}` uses the reserved `__` prefix")]
    ReservedName(String),
    #[error("the randomized input subset is empty")]
    EmptySubset,
    #[error("at least one random bit is required")]
    ZeroGroups,
    #[error("`{0}` is not a primary input of the source netlist")]
    NotAnInput(String),
    #[error("randomized input `{0}` has no group")]
    Unassigned(String),
    #[error("input `{input}` assigned to group {group}, outside 1..={groups}")]
    GroupOutOfRange {
        input: String,
        group: usize,
        groups: usize,
    },
    #[error("group {0} has no randomized input")]
    UnusedGroup(usize),
    #[error("`{0}` is assigned a group but is not in the randomized subset")]
    OutsideSubset(String),
    #[error("input `{0}` listed twice in the subset")]
    DuplicateInput(String),
    #[error("not a randomized design: {0}")]
    Malformed(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// How randomized inputs are spread over random bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Grouping {
    /// Group `(i mod G) + 1` for source input index `i`; on a 3x3 raster
    /// window this is a checkerboard.
    Checkerboard,
    Explicit(BTreeMap<String, usize>),
}

/// Which inputs are randomized and by which random bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct RecordConfig {
    subset: Vec<String>,
    groups: usize,
    assignment: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    subset: Vec<String>,
    groups: usize,
    assignment: BTreeMap<String, usize>,
}

impl TryFrom<RawConfig> for RecordConfig {
    type Error = RecordError;

    fn try_from(r: RawConfig) -> Result<Self, RecordError> {
        RecordConfig::new(r.subset, r.groups, r.assignment)
    }
}

impl From<RecordConfig> for RawConfig {
    fn from(c: RecordConfig) -> Self {
        RawConfig {
            subset: c.subset,
            groups: c.groups,
            assignment: c.assignment,
        }
    }
}

impl RecordConfig {
    pub fn new(
        subset: Vec<String>,
        groups: usize,
        assignment: BTreeMap<String, usize>,
    ) -> Result<Self, RecordError> {
        if groups == 0 {
            return Err(RecordError::ZeroGroups);
        }
        if subset.is_empty() {
            return Err(RecordError::EmptySubset);
        }
        let mut seen = HashSet::new();
        for x in &subset {
            if !seen.insert(x) {
                return Err(RecordError::DuplicateInput(x.clone()));
            }
            let &g = assignment
                .get(x)
                .ok_or_else(|| RecordError::Unassigned(x.clone()))?;
            if g == 0 || g > groups {
                return Err(RecordError::GroupOutOfRange {
                    input: x.clone(),
                    group: g,
                    groups,
                });
            }
        }
        if let Some(extra) = assignment.keys().find(|k| !seen.contains(k)) {
            return Err(RecordError::OutsideSubset(extra.clone()));
        }
        let used: BTreeSet<usize> = assignment.values().copied().collect();
        if let Some(g) = (1..=groups).find(|g| !used.contains(g)) {
            return Err(RecordError::UnusedGroup(g));
        }
        Ok(Self {
            subset,
            groups,
            assignment,
        })
    }

    /// Config over `subset` (all inputs when `None`) of `source`.
    pub fn for_netlist(
        source: &Netlist,
        subset: Option<&[String]>,
        groups: usize,
        grouping: &Grouping,
    ) -> Result<Self, RecordError> {
        let chosen: Vec<String> = match subset {
            None => source.inputs().to_vec(),
            Some(s) => {
                for x in s {
                    if !source.inputs().contains(x) {
                        return Err(RecordError::NotAnInput(x.clone()));
                    }
                }
                // keep source order
                source
                    .inputs()
                    .iter()
                    .filter(|x| s.contains(x))
                    .cloned()
                    .collect()
            }
        };
        let assignment = match grouping {
            Grouping::Checkerboard => source
                .inputs()
                .iter()
                .enumerate()
                .filter(|(_, x)| chosen.contains(x))
                .map(|(i, x)| (x.clone(), i % groups.max(1) + 1))
                .collect(),
            Grouping::Explicit(m) => m.clone(),
        };
        Self::new(chosen, groups, assignment)
    }

    /// All inputs, one random bit.
    pub fn single(source: &Netlist) -> Self {
        Self::for_netlist(source, None, 1, &Grouping::Checkerboard)
            .expect("every netlist with inputs has a valid single-bit config")
    }

    pub fn subset(&self) -> &[String] {
        &self.subset
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    pub fn group_of(&self, input: &str) -> Option<usize> {
        self.assignment.get(input).copied()
    }

    pub fn contains(&self, input: &str) -> bool {
        self.assignment.contains_key(input)
    }

    /// More than two random bits generalizes the published one- and
    /// two-bit constructions.
    pub fn is_extended(&self) -> bool {
        self.groups > 2
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RecordError> {
        Ok(serde_json::from_str(text)?)
    }

    fn check_against(&self, n: &Netlist) -> Result<(), RecordError> {
        for x in &self.subset {
            if !n.inputs().contains(x) {
                return Err(RecordError::NotAnInput(x.clone()));
            }
        }
        Ok(())
    }
}

pub fn random_wire(group: usize) -> String {
    format!("__r{group}")
}

fn encoded_wire(x: &str) -> String {
    format!("__t.{x}")
}

fn complemented_wire(x: &str) -> String {
    format!("__tn.{x}")
}

pub(crate) fn replica_wire(k: usize, w: &str) -> String {
    format!("__rep{k}.{w}")
}

fn selected_wire(o: &str) -> String {
    format!("__m.{o}")
}

fn y_wire(o: &str) -> String {
    format!("__y.{o}")
}

fn z_wire(o: &str) -> String {
    format!("__z.{o}")
}

/// Boundary wires of one replica, aligned with the source inputs/outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaPorts {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// A transformed netlist plus the bookkeeping needed to drive and attack it.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedDesign {
    netlist: Netlist,
    random_wires: Vec<String>,
    encoded_outputs: Vec<String>,
    decoded_outputs: Vec<String>,
    source_inputs: Vec<String>,
    source_outputs: Vec<String>,
    config: RecordConfig,
    replicas: Vec<ReplicaPorts>,
    rng: RngSpec,
}

impl PartitionedDesign {
    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn random_wires(&self) -> &[String] {
        &self.random_wires
    }

    pub fn encoded_outputs(&self) -> &[String] {
        &self.encoded_outputs
    }

    pub fn decoded_outputs(&self) -> &[String] {
        &self.decoded_outputs
    }

    pub fn source_inputs(&self) -> &[String] {
        &self.source_inputs
    }

    pub fn source_outputs(&self) -> &[String] {
        &self.source_outputs
    }

    pub fn config(&self) -> &RecordConfig {
        &self.config
    }

    pub fn rng(&self) -> RngSpec {
        self.rng
    }

    pub fn groups(&self) -> usize {
        self.config.groups
    }

    pub fn replica_count(&self) -> usize {
        self.replicas.len()
    }

    pub fn replica(&self, k: usize) -> Option<&ReplicaPorts> {
        self.replicas.get(k)
    }

    /// Wire feeding source input `x` into replica `k`.
    pub fn replica_input(&self, k: usize, x: &str) -> Option<&str> {
        let i = self.source_inputs.iter().position(|s| s == x)?;
        self.replicas.get(k).map(|p| p.inputs[i].as_str())
    }

    pub fn replica_output(&self, k: usize, o: &str) -> Option<&str> {
        let i = self.source_outputs.iter().position(|s| s == o)?;
        self.replicas.get(k).map(|p| p.outputs[i].as_str())
    }

    /// Wire carrying the multiplexer-selected (plain) value of output `o`.
    pub fn selected_output(&self, o: &str) -> String {
        selected_wire(o)
    }

    pub fn replica_gates(&self, k: usize) -> impl Iterator<Item = &Gate> {
        self.netlist
            .gates()
            .iter()
            .filter(move |g| g.replica == Some(k as u32))
    }

    /// Canonical text of the untrusted gates only.
    pub fn untrusted_zone_text(&self) -> String {
        let mut s = String::new();
        for g in self.netlist.gates() {
            if g.zone == Zone::Untrusted {
                crate::netlist::write::write_gate(&mut s, g);
            }
        }
        s
    }

    pub fn to_text(&self) -> String {
        write_netlist(&self.netlist)
    }

    /// Recovers a design from a transformed netlist (e.g. one read back
    /// from disk), using the reserved naming scheme.
    pub fn from_netlist(netlist: Netlist) -> Result<Self, RecordError> {
        let source_inputs: Vec<String> = netlist
            .inputs()
            .iter()
            .filter(|x| !x.starts_with(RESERVED_PREFIX))
            .cloned()
            .collect();
        let mut groups = 0;
        for w in netlist.inputs().iter().filter(|x| x.starts_with(RESERVED_PREFIX)) {
            let g: usize = w
                .strip_prefix("__r")
                .and_then(|g| g.parse().ok())
                .ok_or_else(|| RecordError::Malformed(format!("unexpected input `{w}`")))?;
            groups += 1;
            if g != groups {
                return Err(RecordError::Malformed(format!(
                    "random inputs must be __r1..__rG in order, found `{w}`"
                )));
            }
        }
        if groups == 0 {
            return Err(RecordError::Malformed("no __r random inputs".into()));
        }
        let random_wires: Vec<String> = (1..=groups).map(random_wire).collect();

        let source_outputs: Vec<String> = netlist
            .outputs()
            .iter()
            .filter_map(|o| o.strip_prefix("__y.").map(str::to_string))
            .collect();
        if source_outputs.is_empty() {
            return Err(RecordError::Malformed("no __y. encoded outputs".into()));
        }
        let encoded_outputs: Vec<String> = source_outputs.iter().map(|o| y_wire(o)).collect();
        let decoded_outputs: Vec<String> = source_outputs.iter().map(|o| z_wire(o)).collect();
        for z in &decoded_outputs {
            if !netlist.outputs().contains(z) {
                return Err(RecordError::Malformed(format!("missing decoded output `{z}`")));
            }
        }

        let mut subset = Vec::new();
        let mut assignment = BTreeMap::new();
        for x in &source_inputs {
            if let Some(g) = netlist.driver(&encoded_wire(x)) {
                let group = g
                    .ins
                    .iter()
                    .find_map(|w| {
                        w.strip_prefix("__r")
                            .and_then(|n| n.parse::<usize>().ok())
                    })
                    .ok_or_else(|| {
                        RecordError::Malformed(format!("encoder for `{x}` reads no random bit"))
                    })?;
                subset.push(x.clone());
                assignment.insert(x.clone(), group);
            }
        }
        let config = RecordConfig::new(subset, groups, assignment)?;

        let n_replicas = netlist
            .gates()
            .iter()
            .filter_map(|g| g.replica)
            .max()
            .map_or(0, |m| m as usize + 1);
        if n_replicas < 1 << groups {
            return Err(RecordError::Malformed(format!(
                "expected {} replicas, found {n_replicas}",
                1 << groups
            )));
        }
        let replicas = (0..n_replicas)
            .map(|k| replica_ports(&netlist, &config, &source_inputs, &source_outputs, k))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            netlist,
            random_wires,
            encoded_outputs,
            decoded_outputs,
            source_inputs,
            source_outputs,
            config,
            replicas,
            rng: RngSpec::default(),
        })
    }
}

/// Input wire of replica `k` for source input `x` under the naming scheme.
fn replica_input_name(config: &RecordConfig, k: usize, x: &str) -> String {
    match config.group_of(x) {
        None => x.to_string(),
        Some(_) if k >= 1 << config.groups => crate::ftrecord::spare_input_wire(x),
        Some(g) => {
            if (k >> (g - 1)) & 1 == 1 {
                complemented_wire(x)
            } else {
                encoded_wire(x)
            }
        }
    }
}

fn replica_ports(
    netlist: &Netlist,
    config: &RecordConfig,
    source_inputs: &[String],
    source_outputs: &[String],
    k: usize,
) -> Result<ReplicaPorts, RecordError> {
    let inputs: Vec<String> = source_inputs
        .iter()
        .map(|x| replica_input_name(config, k, x))
        .collect();
    let outputs = source_outputs
        .iter()
        .map(|o| {
            let w = replica_wire(k, o);
            if netlist.has_wire(&w) {
                Ok(w)
            } else if let Some(i) = source_inputs.iter().position(|x| x == o) {
                Ok(inputs[i].clone())
            } else {
                Err(RecordError::Malformed(format!("replica {k} has no output `{o}`")))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(ReplicaPorts { inputs, outputs })
}

/// Gates of replica `k`: a verbatim copy of `source` with renamed wires.
pub(crate) fn replica_gates(
    source: &Netlist,
    config: &RecordConfig,
    k: usize,
) -> Vec<Gate> {
    let inputs: HashSet<&str> = source.inputs().iter().map(String::as_str).collect();
    let rename = |w: &String| {
        if inputs.contains(w.as_str()) {
            replica_input_name(config, k, w)
        } else {
            replica_wire(k, w)
        }
    };
    source
        .gates()
        .iter()
        .map(|g| {
            Gate::new(g.kind, rename(&g.out), g.ins.iter().map(rename).collect())
                .untrusted(k as u32)
        })
        .collect()
}

/// Pieces of a transformed design before the netlist is sealed; shared
/// with the fault-tolerant variant, which appends its own stages.
pub(crate) struct Stages {
    pub inputs: Vec<String>,
    pub gates: Vec<Gate>,
    pub encoded_outputs: Vec<String>,
    pub decoded_outputs: Vec<String>,
}

pub(crate) fn build_stages(n: &Netlist, cfg: &RecordConfig) -> Result<Stages, RecordError> {
    if let Some(w) = n.wire_names().iter().find(|w| w.starts_with(RESERVED_PREFIX)) {
        return Err(RecordError::ReservedName(w.clone()));
    }
    cfg.check_against(n)?;
    let g_count = cfg.groups;
    let mut gates = Vec::new();

    // encode
    for x in n.inputs() {
        if let Some(g) = cfg.group_of(x) {
            let r = random_wire(g);
            gates.push(Gate::new(GateKind::Xor, encoded_wire(x), vec![x.clone(), r.clone()]));
            gates.push(Gate::new(GateKind::Xnor, complemented_wire(x), vec![x.clone(), r]));
        }
    }

    // replicas
    let mut outputs_by_replica = Vec::new();
    for k in 0..1usize << g_count {
        gates.extend(replica_gates(n, cfg, k));
        let ports = n
            .outputs()
            .iter()
            .map(|o| {
                if n.inputs().contains(o) {
                    replica_input_name(cfg, k, o)
                } else {
                    replica_wire(k, o)
                }
            })
            .collect::<Vec<_>>();
        outputs_by_replica.push(ports);
    }

    // select, re-encode, decode
    let mut encoded_outputs = Vec::new();
    let mut decoded_outputs = Vec::new();
    for (oi, o) in n.outputs().iter().enumerate() {
        let m = mux_tree(o, 1, 0, String::new(), g_count, &outputs_by_replica, oi, &mut gates);
        let y = y_wire(o);
        let z = z_wire(o);
        gates.push(Gate::new(GateKind::Xor, y.clone(), vec![m, random_wire(1)]));
        gates.push(Gate::new(GateKind::Xor, z.clone(), vec![y.clone(), random_wire(1)]));
        encoded_outputs.push(y);
        decoded_outputs.push(z);
    }

    let inputs = n
        .inputs()
        .iter()
        .cloned()
        .chain((1..=g_count).map(random_wire))
        .collect();
    Ok(Stages {
        inputs,
        gates,
        encoded_outputs,
        decoded_outputs,
    })
}

/// Balanced MUX2 tree; level `j` selects on `r_j`, so `r1` is outermost.
#[allow(clippy::too_many_arguments)]
fn mux_tree(
    o: &str,
    level: usize,
    prefix: usize,
    path: String,
    groups: usize,
    outputs: &[Vec<String>],
    oi: usize,
    gates: &mut Vec<Gate>,
) -> String {
    if level > groups {
        return outputs[prefix][oi].clone();
    }
    let a0 = mux_tree(o, level + 1, prefix, format!("{path}0"), groups, outputs, oi, gates);
    let a1 = mux_tree(
        o,
        level + 1,
        prefix | 1 << (level - 1),
        format!("{path}1"),
        groups,
        outputs,
        oi,
        gates,
    );
    let out = if level == 1 {
        selected_wire(o)
    } else {
        format!("{}.{path}", selected_wire(o))
    };
    gates.push(Gate::new(GateKind::Mux2, out.clone(), vec![random_wire(level), a0, a1]));
    out
}

/// Applies the randomized encoding to `n`.
pub fn transform(n: &Netlist, cfg: &RecordConfig) -> Result<PartitionedDesign, RecordError> {
    let stages = build_stages(n, cfg)?;
    let outputs = stages
        .encoded_outputs
        .iter()
        .chain(&stages.decoded_outputs)
        .cloned()
        .collect();
    let netlist = Netlist::new(
        format!("{}_record", n.name()),
        stages.inputs,
        outputs,
        stages.gates,
    )?;
    PartitionedDesign::from_netlist(netlist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    RandomBit,
    RawRandomizedInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Output wire of the offending untrusted gate.
    pub gate: String,
    pub wire: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::RandomBit => "random bit",
            ViolationKind::RawRandomizedInput => "raw randomized input",
        };
        write!(f, "untrusted gate `{}` reads {what} `{}`", self.gate, self.wire)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClosureReport {
    pub violations: Vec<Violation>,
}

impl ClosureReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that no untrusted gate reads a random bit or a raw randomized input.
pub fn partition_check(d: &PartitionedDesign) -> ClosureReport {
    let random: HashSet<&str> = d.random_wires.iter().map(String::as_str).collect();
    let mut violations = Vec::new();
    for g in d.netlist.gates().iter().filter(|g| g.zone == Zone::Untrusted) {
        for w in &g.ins {
            let kind = if random.contains(w.as_str()) {
                ViolationKind::RandomBit
            } else if d.config.contains(w) {
                ViolationKind::RawRandomizedInput
            } else {
                continue;
            };
            violations.push(Violation {
                gate: g.out.clone(),
                wire: w.clone(),
                kind,
            });
        }
    }
    ClosureReport { violations }
}

/// The bona fide user's view: source inputs plus random bits in, plain `f`
/// out through the decoder.
pub fn user_view(d: &PartitionedDesign) -> Netlist {
    d.netlist
        .with_outputs(d.decoded_outputs.clone())
        .expect("decoded outputs are driven")
        .pruned()
}

/// What the randomized chip exports: the encoded outputs `y`, which travel
/// with `r1`; the `z` decoders sit with the consumer and are dropped.
pub fn chip_view(d: &PartitionedDesign) -> Netlist {
    d.netlist
        .with_outputs(d.encoded_outputs.clone())
        .expect("encoded outputs are driven")
        .pruned()
}

/// Replaces the random-bit source; the netlist is untouched.
pub fn rekey(d: &PartitionedDesign, new_rng: RngSpec) -> PartitionedDesign {
    PartitionedDesign {
        rng: new_rng,
        ..d.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{fixtures, parse_netlist, wires};

    fn and2() -> Netlist {
        fixtures::and_tree(2).unwrap()
    }

    #[test]
    fn and2_single_bit_structure() {
        let d = transform(&and2(), &RecordConfig::single(&and2())).unwrap();
        assert_eq!(d.replica_count(), 2);
        assert_eq!(d.random_wires(), ["__r1"]);
        assert_eq!(d.encoded_outputs(), ["__y.y"]);
        assert_eq!(d.decoded_outputs(), ["__z.y"]);
        assert_eq!(d.replica_input(0, "i0"), Some("__t.i0"));
        assert_eq!(d.replica_input(1, "i0"), Some("__tn.i0"));
        assert_eq!(d.replica_gates(0).count(), 1);
        let untrusted = d
            .netlist()
            .gates()
            .iter()
            .filter(|g| g.zone == Zone::Untrusted)
            .count();
        assert_eq!(untrusted, 2);
    }

    #[test]
    fn encoder_follows_xor_with_random_bit() {
        let n = fixtures::inverter();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        let vals = d
            .netlist()
            .evaluate_all(&crate::netlist::Assignment::from_bits(&["a", "__r1"], &[false, true]))
            .unwrap();
        assert_eq!(vals.get("__t.a"), Some(true));
    }

    #[test]
    fn reserved_names_rejected() {
        let n = parse_netlist("module m\ninput __a\noutput y\nnot y __a\nend").unwrap();
        let cfg = RecordConfig::single(&n);
        assert!(matches!(transform(&n, &cfg), Err(RecordError::ReservedName(_))));
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            RecordConfig::new(vec![], 1, BTreeMap::new()),
            Err(RecordError::EmptySubset)
        ));
        let one = |g| BTreeMap::from([("a".to_string(), g)]);
        assert!(matches!(
            RecordConfig::new(wires(&["a"]), 2, one(1)),
            Err(RecordError::UnusedGroup(2))
        ));
        assert!(matches!(
            RecordConfig::new(wires(&["a"]), 1, one(3)),
            Err(RecordError::GroupOutOfRange { .. })
        ));
        assert!(matches!(
            RecordConfig::new(wires(&["a"]), 1, BTreeMap::new()),
            Err(RecordError::Unassigned(_))
        ));
    }

    #[test]
    fn config_json_shape() {
        let n = fixtures::maj9();
        let cfg = RecordConfig::for_netlist(&n, None, 2, &Grouping::Checkerboard).unwrap();
        let v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(v["groups"], 2);
        assert_eq!(v["subset"].as_array().unwrap().len(), 9);
        assert_eq!(v["assignment"]["x0"], 1);
        assert_eq!(v["assignment"]["x1"], 2);
        assert_eq!(RecordConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(RecordConfig::from_json(r#"{"subset":[],"groups":1,"assignment":{}}"#).is_err());
    }

    #[test]
    fn subset_must_name_inputs() {
        let n = and2();
        let err = RecordConfig::for_netlist(&n, Some(&wires(&["q"])), 1, &Grouping::Checkerboard);
        assert!(matches!(err, Err(RecordError::NotAnInput(_))));
    }

    #[test]
    fn mutation_with_random_bit_in_replica_is_flagged() {
        let n = and2();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        assert!(partition_check(&d).passed());
        let text = d.to_text().replace("and __rep0.y __t.i0 __t.i1", "and __rep0.y __r1 __t.i1");
        let bad = PartitionedDesign::from_netlist(parse_netlist(&text).unwrap()).unwrap();
        let report = partition_check(&bad);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].gate, "__rep0.y");
        assert_eq!(report.violations[0].kind, ViolationKind::RandomBit);
    }

    #[test]
    fn mutation_with_raw_input_in_replica_is_flagged() {
        let n = and2();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        let text = d.to_text().replace("and __rep1.y __tn.i0 __tn.i1", "and __rep1.y i0 __tn.i1");
        let bad = PartitionedDesign::from_netlist(parse_netlist(&text).unwrap()).unwrap();
        let report = partition_check(&bad);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::RawRandomizedInput);
    }

    #[test]
    fn non_randomized_inputs_feed_replicas_directly() {
        let n = fixtures::adder4();
        let subset = wires(&["a3", "a2", "a1", "a0"]);
        let cfg = RecordConfig::for_netlist(&n, Some(&subset), 1, &Grouping::Checkerboard).unwrap();
        let d = transform(&n, &cfg).unwrap();
        for k in 0..2 {
            assert_eq!(d.replica_input(k, "b2"), Some("b2"));
            assert_ne!(d.replica_input(k, "a2"), Some("a2"));
        }
        assert!(partition_check(&d).passed());
    }

    #[test]
    fn passthrough_output_is_supported() {
        let n = parse_netlist("module p\ninput a b\noutput a y\nand y a b\nend").unwrap();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        assert_eq!(d.replica_output(1, "a"), Some("__tn.a"));
        let u = user_view(&d);
        for bits in 0..8u64 {
            let v = crate::bits::bits_msb_first(bits, 3);
            let out = u.evaluate_bits(&v).unwrap();
            assert_eq!(out, vec![v[0], v[0] && v[1]]);
        }
    }

    #[test]
    fn rekey_keeps_netlist() {
        let n = fixtures::maj9();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        let d2 = rekey(&d, RngSpec::new(7));
        assert_eq!(d2.untrusted_zone_text(), d.untrusted_zone_text());
        assert_eq!(d2.netlist(), d.netlist());
        assert_eq!(d2.rng(), RngSpec::new(7));
    }
}
