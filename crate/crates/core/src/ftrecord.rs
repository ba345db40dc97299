//! Fault-tolerant single-bit design: a spare replica that mirrors whichever
//! replica `r` selects, a comparator that flags disagreement, and a
//! majority voter used to replay a flagged cycle.
//!
//! Protocol per stimulus cycle:
//!
//! 1. Evaluate. If the spare agrees with the selected replica, commit `m`.
//!    Otherwise raise `e`, buffer the suspect output and save `(x, r)`.
//! 2. On the next step replay the saved `(x, r)` (the transient has
//!    expired), commit the per-output majority of the three replicas in
//!    place of the buffered value and clear `e`.
//!
//! [`REPLAY_LIMIT`] consecutive flagged cycles mark the run as
//! [`FtStatus::PermanentFaultSuspected`]; nothing is purged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{format_bits, BitStream};
use crate::netlist::{Gate, GateKind, Netlist, Override, OverrideAction};
use crate::recordize::{
    build_stages, replica_gates, replica_wire, PartitionedDesign, RecordConfig, RecordError,
};
use crate::sim::{simulate, RngSpec, SimError, SimTrace, Stimulus};

pub const SPARE: usize = 2;
pub const REPLAY_LIMIT: usize = 3;
pub const MISCOMPARE: &str = "__miscompare";

#[derive(Debug, Error)]
pub enum FtError {
    #[error("the fault-tolerant variant needs exactly one random bit, got {0}")]
    Groups(usize),
    #[error("not a fault-tolerant design: {0}")]
    Malformed(String),
    #[error("fault {index}: no replica {replica}")]
    UnknownReplica { index: usize, replica: usize },
    #[error("fault {index}: `{wire}` is not a gate output of the source netlist")]
    UnknownWire { index: usize, wire: String },
    #[error("fault {index}: cycle {cycle} is past the end of a {cycles}-cycle run")]
    CycleOutOfRange {
        index: usize,
        cycle: usize,
        cycles: usize,
    },
    #[error("more than one fault in cycle {0}")]
    MultipleFaults(usize),
    #[error("fault plan JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub(crate) fn spare_input_wire(x: &str) -> String {
    format!("__s.{x}")
}

fn comparator_wire(o: &str) -> String {
    format!("__cmp.{o}")
}

fn vote_wire(o: &str) -> String {
    format!("__vote.{o}")
}

/// A single-bit design with a spare replica, comparator and voter.
#[derive(Debug, Clone, PartialEq)]
pub struct FtDesign {
    design: PartitionedDesign,
    comparators: Vec<String>,
    votes: Vec<String>,
    fault_sites: BTreeSet<String>,
}

impl FtDesign {
    pub fn design(&self) -> &PartitionedDesign {
        &self.design
    }

    pub fn netlist(&self) -> &Netlist {
        self.design.netlist()
    }

    pub fn comparators(&self) -> &[String] {
        &self.comparators
    }

    pub fn votes(&self) -> &[String] {
        &self.votes
    }

    /// Source gate outputs that faults may target, in each replica.
    pub fn fault_sites(&self) -> impl Iterator<Item = &str> {
        self.fault_sites.iter().map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        self.design.to_text()
    }

    /// Recognizes a fault-tolerant design by its reserved wire names.
    pub fn from_design(design: PartitionedDesign) -> Result<Self, FtError> {
        if design.groups() != 1 {
            return Err(FtError::Groups(design.groups()));
        }
        if design.replica_count() != 3 {
            return Err(FtError::Malformed(format!(
                "expected 3 replicas, found {}",
                design.replica_count()
            )));
        }
        let n = design.netlist();
        if !n.outputs().iter().any(|o| o == MISCOMPARE) {
            return Err(FtError::Malformed(format!("missing output `{MISCOMPARE}`")));
        }
        let comparators: Vec<String> = design.source_outputs().iter().map(|o| comparator_wire(o)).collect();
        let votes: Vec<String> = design.source_outputs().iter().map(|o| vote_wire(o)).collect();
        for w in comparators.iter().chain(&votes) {
            if !n.has_wire(w) {
                return Err(FtError::Malformed(format!("missing wire `{w}`")));
            }
        }
        let prefix = "__rep0.";
        let fault_sites = design
            .replica_gates(0)
            .filter_map(|g| g.out.strip_prefix(prefix).map(str::to_string))
            .collect();
        Ok(Self {
            design,
            comparators,
            votes,
            fault_sites,
        })
    }
}

/// Builds the fault-tolerant variant of `n`; `cfg` must use one random bit.
pub fn transform_ft(n: &Netlist, cfg: &RecordConfig) -> Result<FtDesign, FtError> {
    if cfg.groups() != 1 {
        return Err(FtError::Groups(cfg.groups()));
    }
    let mut st = build_stages(n, cfg)?;
    let is_input = |w: &str| n.inputs().iter().any(|x| x == w);

    for x in n.inputs() {
        if cfg.contains(x) {
            st.gates.push(Gate::new(
                GateKind::Mux2,
                spare_input_wire(x),
                vec!["__r1".into(), format!("__t.{x}"), format!("__tn.{x}")],
            ));
        }
    }
    st.gates.extend(replica_gates(n, cfg, SPARE));

    let port = |k: usize, o: &str| {
        if is_input(o) {
            if !cfg.contains(o) {
                o.to_string()
            } else if k == SPARE {
                spare_input_wire(o)
            } else if k == 1 {
                format!("__tn.{o}")
            } else {
                format!("__t.{o}")
            }
        } else {
            replica_wire(k, o)
        }
    };

    let mut cmps = Vec::new();
    let mut votes = Vec::new();
    for o in n.outputs() {
        let c = comparator_wire(o);
        st.gates.push(Gate::new(
            GateKind::Xor,
            c.clone(),
            vec![port(SPARE, o), format!("__m.{o}")],
        ));
        cmps.push(c);

        let (a, b, s) = (port(0, o), port(1, o), port(SPARE, o));
        let v = vote_wire(o);
        let terms = [("ab", &a, &b), ("as", &a, &s), ("bs", &b, &s)];
        for (tag, p, q) in terms {
            st.gates.push(Gate::new(
                GateKind::And,
                format!("{v}.{tag}"),
                vec![p.clone(), q.clone()],
            ));
        }
        st.gates.push(Gate::new(
            GateKind::Or,
            v.clone(),
            vec![format!("{v}.ab"), format!("{v}.as"), format!("{v}.bs")],
        ));
        votes.push(v);
    }
    let kind = if cmps.len() == 1 { GateKind::Buf } else { GateKind::Or };
    st.gates.push(Gate::new(kind, MISCOMPARE, cmps));

    let outputs = st
        .encoded_outputs
        .iter()
        .chain(&st.decoded_outputs)
        .cloned()
        .chain(std::iter::once(MISCOMPARE.to_string()))
        .chain(votes)
        .collect();
    let netlist = Netlist::new(format!("{}_ftrecord", n.name()), st.inputs, outputs, st.gates)
        .map_err(RecordError::from)?;
    FtDesign::from_design(PartitionedDesign::from_netlist(netlist)?)
}

/// Value a fault drives onto its wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum FaultValue {
    Force(bool),
    Flip,
}

impl TryFrom<serde_json::Value> for FaultValue {
    type Error = String;

    fn try_from(v: serde_json::Value) -> Result<Self, String> {
        match &v {
            serde_json::Value::Number(n) if n.as_u64() == Some(0) => Ok(FaultValue::Force(false)),
            serde_json::Value::Number(n) if n.as_u64() == Some(1) => Ok(FaultValue::Force(true)),
            serde_json::Value::String(s) if s == "flip" => Ok(FaultValue::Flip),
            _ => Err(format!("fault value must be 0, 1 or \"flip\", got {v}")),
        }
    }
}

impl From<FaultValue> for serde_json::Value {
    fn from(v: FaultValue) -> Self {
        match v {
            FaultValue::Force(b) => serde_json::Value::from(b as u8),
            FaultValue::Flip => serde_json::Value::from("flip"),
        }
    }
}

/// One transient upset, active during the first evaluation of `cycle`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub cycle: usize,
    pub replica: usize,
    /// Gate output name in the source netlist.
    pub wire: String,
    pub value: FaultValue,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaultPlan(pub Vec<Fault>);

impl FaultPlan {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(cycle: usize, replica: usize, wire: impl Into<String>, value: FaultValue) -> Self {
        Self(vec![Fault {
            cycle,
            replica,
            wire: wire.into(),
            value,
        }])
    }

    pub fn from_json(text: &str) -> Result<Self, FtError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    /// Checks every fault against the design and run length and returns
    /// them keyed by cycle.
    fn by_cycle(&self, d: &FtDesign, cycles: usize) -> Result<BTreeMap<usize, &Fault>, FtError> {
        let mut out = BTreeMap::new();
        for (index, f) in self.0.iter().enumerate() {
            if f.replica > SPARE {
                return Err(FtError::UnknownReplica {
                    index,
                    replica: f.replica,
                });
            }
            if !d.fault_sites.contains(&f.wire) {
                return Err(FtError::UnknownWire {
                    index,
                    wire: f.wire.clone(),
                });
            }
            if f.cycle >= cycles {
                return Err(FtError::CycleOutOfRange {
                    index,
                    cycle: f.cycle,
                    cycles,
                });
            }
            if out.insert(f.cycle, f).is_some() {
                return Err(FtError::MultipleFaults(f.cycle));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FtStatus {
    Ok,
    PermanentFaultSuspected { at_cycle: usize },
}

impl fmt::Display for FtStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FtStatus::Ok => f.write_str("ok"),
            FtStatus::PermanentFaultSuspected { at_cycle } => {
                write!(f, "permanent fault suspected at cycle {at_cycle}")
            }
        }
    }
}

/// One logical step of the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FtStep {
    pub step: usize,
    pub cycle: usize,
    pub phase: u8,
    pub e: bool,
    pub buffered: Option<Vec<bool>>,
    pub committed: Option<Vec<bool>>,
    /// `(x, r)` held for the replay.
    pub saved: Option<(Vec<bool>, Vec<bool>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtTrace {
    pub steps: Vec<FtStep>,
    pub status: FtStatus,
    outputs: usize,
    cycles: usize,
}

impl FtTrace {
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// Final committed value per output, one bit per stimulus cycle.
    pub fn committed_stream(&self) -> Vec<BitStream> {
        let mut out = vec![BitStream::zeros(self.cycles); self.outputs];
        for s in &self.steps {
            if let Some(v) = &s.committed {
                for (o, &b) in out.iter_mut().zip(v) {
                    o.set(s.cycle, b);
                }
            }
        }
        out
    }

    /// Cycles whose first evaluation raised `e`.
    pub fn flagged_cycles(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.phase == 1 && s.e)
            .map(|s| s.cycle)
            .collect()
    }

    pub fn replays(&self) -> usize {
        self.steps.iter().filter(|s| s.phase == 2).count()
    }

    /// `step,cycle,phase,e,buffered,committed` rows.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "step,cycle,phase,e,buffered,committed")?;
        let bits = |v: &Option<Vec<bool>>| v.as_deref().map(format_bits).unwrap_or_default();
        for s in &self.steps {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.step,
                s.cycle,
                s.phase,
                s.e as u8,
                bits(&s.buffered),
                bits(&s.committed)
            )?;
        }
        Ok(())
    }
}

struct Indices {
    m: Vec<usize>,
    votes: Vec<usize>,
    miscompare: usize,
}

fn read(vals: &[bool], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| vals[i]).collect()
}

/// Runs the two-phase protocol over `stim` with fresh `r` per cycle.
pub fn ft_simulate(
    d: &FtDesign,
    stim: &Stimulus,
    rng: RngSpec,
    faults: &FaultPlan,
) -> Result<FtTrace, FtError> {
    let trace: SimTrace = simulate(&d.design, stim, rng)?;
    let plan = faults.by_cycle(d, trace.cycles())?;
    let prog = d.netlist().program();
    let index = |w: &str| prog.wire_index(w).expect("design wire");
    let ix = Indices {
        m: d.design.source_outputs().iter().map(|o| index(&format!("__m.{o}"))).collect(),
        votes: d.votes.iter().map(|w| index(w)).collect(),
        miscompare: index(MISCOMPARE),
    };
    let column_bits = |names: &[String], c: usize| trace.bits_at(names, c);
    let m_names: Vec<String> = d.design.source_outputs().iter().map(|o| format!("__m.{o}")).collect();

    let mut steps = Vec::new();
    let mut status = FtStatus::Ok;
    let mut consecutive = 0;
    for c in 0..trace.cycles() {
        let x = trace.inputs_at(c);
        let r = trace.random_at(c);
        let (miscompare, m) = match plan.get(&c) {
            None => (
                trace.value(MISCOMPARE, c).unwrap(),
                column_bits(&m_names, c),
            ),
            Some(f) => {
                let mut all = x.clone();
                all.extend(&r);
                let ov = Override {
                    wire: index(&replica_wire(f.replica, &f.wire)),
                    mask: 1,
                    action: match f.value {
                        FaultValue::Force(b) => OverrideAction::Force(b),
                        FaultValue::Flip => OverrideAction::Flip,
                    },
                };
                let vals = prog.eval_bits_with(&all, &[ov]);
                (vals[ix.miscompare], read(&vals, &ix.m))
            }
        };
        if !miscompare {
            consecutive = 0;
            steps.push(FtStep {
                step: steps.len(),
                cycle: c,
                phase: 1,
                e: false,
                buffered: None,
                committed: Some(m),
                saved: None,
            });
            continue;
        }
        consecutive += 1;
        if consecutive >= REPLAY_LIMIT && status == FtStatus::Ok {
            status = FtStatus::PermanentFaultSuspected { at_cycle: c };
        }
        steps.push(FtStep {
            step: steps.len(),
            cycle: c,
            phase: 1,
            e: true,
            buffered: Some(m.clone()),
            committed: None,
            saved: Some((x.clone(), r.clone())),
        });
        let mut all = x.clone();
        all.extend(&r);
        let vals = prog.eval_bits(&all);
        steps.push(FtStep {
            step: steps.len(),
            cycle: c,
            phase: 2,
            e: false,
            buffered: Some(m),
            committed: Some(read(&vals, &ix.votes)),
            saved: Some((x, r)),
        });
    }
    Ok(FtTrace {
        steps,
        status,
        outputs: d.design.source_outputs().len(),
        cycles: trace.cycles(),
    })
}

/// Majority of three bits.
pub fn majority(a: bool, b: bool, c: bool) -> bool {
    (a && b) || (a && c) || (b && c)
}
