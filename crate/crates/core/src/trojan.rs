//! Passive data-leakage Trojans in the untrusted zone.
//!
//! A Trojan sees every untrusted wire on every cycle ([`tap`]) and knows the
//! design, so it can tell which tapped wire feeds which source input. It
//! never sees `r`. [`leak_report`] measures what that view reveals about the
//! true inputs and outputs; [`reconstruct`] implements concrete guessing
//! strategies; [`trigger_experiment`] models a trigger that watches the
//! replica-0 input bus.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::BitStream;
use crate::netlist::Zone;
use crate::recordize::{PartitionedDesign, ReplicaPorts};
use crate::sim::{simulate, RngSpec, SimError, SimTrace, Stimulus};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrojanError {
    #[error("design has no replica {0}")]
    UnknownReplica(usize),
    #[error("wire `{0}` is not visible to the Trojan")]
    MissingWire(String),
    #[error("design has no output `{0}`")]
    UnknownOutput(String),
    #[error("wire `{0}` is not a replica input port")]
    NotAnInputPort(String),
    #[error("streams differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("streams are empty")]
    Empty,
    #[error("trigger has {wires} watched wires but a {pattern}-bit pattern")]
    TriggerWidth { wires: usize, pattern: usize },
    #[error("watched wire `{0}` is not a replica-0 input")]
    NotWatchable(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Isolation {
    /// One Trojan sees every replica.
    All,
    /// Uncoordinated Trojans; this one sees replica `k` only.
    Replica(usize),
}

/// The untrusted-zone projection of a simulation trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakTrace {
    cycles: usize,
    wires: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<BitStream>,
    /// `(replica index, ports)` for every visible replica.
    ports: Vec<(usize, ReplicaPorts)>,
    source_inputs: Vec<String>,
    source_outputs: Vec<String>,
}

impl LeakTrace {
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn wires(&self) -> &[String] {
        &self.wires
    }

    pub fn contains(&self, wire: &str) -> bool {
        self.index.contains_key(wire)
    }

    pub fn column(&self, wire: &str) -> Result<&BitStream, TrojanError> {
        self.index
            .get(wire)
            .map(|&i| &self.columns[i])
            .ok_or_else(|| TrojanError::MissingWire(wire.to_string()))
    }

    pub fn replica_ports(&self, k: usize) -> Option<&ReplicaPorts> {
        self.ports.iter().find(|(i, _)| *i == k).map(|(_, p)| p)
    }

    /// Source input fed by a tapped replica input wire.
    pub fn source_of(&self, wire: &str) -> Option<&str> {
        self.ports.iter().find_map(|(_, p)| {
            p.inputs
                .iter()
                .position(|w| w == wire)
                .map(|i| self.source_inputs[i].as_str())
        })
    }
}

/// Projects `t` onto the wires an untrusted-zone Trojan can observe: the
/// inputs and outputs of untrusted gates.
pub fn tap(d: &PartitionedDesign, t: &SimTrace, isolation: Isolation) -> Result<LeakTrace, TrojanError> {
    let visible: Vec<usize> = match isolation {
        Isolation::All => (0..d.replica_count()).collect(),
        Isolation::Replica(k) if k < d.replica_count() => vec![k],
        Isolation::Replica(k) => return Err(TrojanError::UnknownReplica(k)),
    };
    let mut wires = Vec::new();
    let mut index = HashMap::new();
    for g in d.netlist().gates() {
        let Some(k) = g.replica else { continue };
        if g.zone != Zone::Untrusted || !visible.contains(&(k as usize)) {
            continue;
        }
        for w in g.ins.iter().chain(std::iter::once(&g.out)) {
            if !index.contains_key(w) {
                index.insert(w.clone(), wires.len());
                wires.push(w.clone());
            }
        }
    }
    // Passthrough ports (an output that is also an input) have no gate.
    for &k in &visible {
        let p = d.replica(k).expect("index checked");
        for w in p.inputs.iter().chain(&p.outputs) {
            if !index.contains_key(w) {
                index.insert(w.clone(), wires.len());
                wires.push(w.clone());
            }
        }
    }
    for w in &wires {
        assert!(
            !d.random_wires().contains(w),
            "random bit `{w}` reached the untrusted zone"
        );
    }
    let columns = wires
        .iter()
        .map(|w| t.column(w).cloned().ok_or_else(|| TrojanError::MissingWire(w.clone())))
        .collect::<Result<_, _>>()?;
    Ok(LeakTrace {
        cycles: t.cycles(),
        wires,
        index,
        columns,
        ports: visible
            .iter()
            .map(|&k| (k, d.replica(k).unwrap().clone()))
            .collect(),
        source_inputs: d.source_inputs().to_vec(),
        source_outputs: d.source_outputs().to_vec(),
    })
}

/// Plug-in estimate of I(A;B) in bits from the empirical 2x2 joint
/// histogram. The estimator is biased upward by about `1/(2n ln 2)` for
/// independent streams.
pub fn mutual_information(a: &BitStream, b: &BitStream) -> Result<f64, TrojanError> {
    if a.len() != b.len() {
        return Err(TrojanError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(TrojanError::Empty);
    }
    let n = a.len() as f64;
    let n11 = a.and_count(b) as f64;
    let na = a.count_ones() as f64;
    let nb = b.count_ones() as f64;
    let joint = [
        [n - na - nb + n11, nb - n11],
        [na - n11, n11],
    ];
    let pa = [(n - na) / n, na / n];
    let pb = [(n - nb) / n, nb / n];
    let mut mi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let p = joint[i][j] / n;
            if p > 0.0 {
                mi += p * (p / (pa[i] * pb[j])).log2();
            }
        }
    }
    Ok(mi.clamp(0.0, 1.0))
}

/// Fraction of positions where `guess` matches `truth`.
pub fn accuracy(guess: &BitStream, truth: &BitStream) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    guess.agreements(truth) as f64 / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// Replica `replica`'s copy of `output` taken as the true output.
    PickReplica { replica: usize, output: String },
    /// A tapped wire taken as the source input it encodes.
    InputEcho { wire: String },
    /// `a XOR b` per pair, taken as the XOR of the corresponding inputs.
    Gradient { pairs: Vec<(String, String)> },
}

/// Runs an attacker strategy; returns one guessed stream per target.
pub fn reconstruct(l: &LeakTrace, strategy: &Strategy) -> Result<Vec<BitStream>, TrojanError> {
    match strategy {
        Strategy::PickReplica { replica, output } => {
            let ports = l
                .replica_ports(*replica)
                .ok_or(TrojanError::UnknownReplica(*replica))?;
            let i = l
                .source_outputs
                .iter()
                .position(|o| o == output)
                .ok_or_else(|| TrojanError::UnknownOutput(output.clone()))?;
            Ok(vec![l.column(&ports.outputs[i])?.clone()])
        }
        Strategy::InputEcho { wire } => Ok(vec![l.column(wire)?.clone()]),
        Strategy::Gradient { pairs } => pairs
            .iter()
            .map(|(a, b)| Ok(l.column(a)?.xor(l.column(b)?)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireLeak {
    pub mi_vs: MiVs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiVs {
    pub input: BTreeMap<String, f64>,
    pub output: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairLeak {
    pub a: String,
    pub b: String,
    pub mi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyScore {
    pub name: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakReport {
    pub wires: BTreeMap<String, WireLeak>,
    pub pairs: Vec<PairLeak>,
    pub strategies: Vec<StrategyScore>,
}

impl LeakReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
            .map(|p| p.mi)
    }
}

fn truth_inputs(d: &PartitionedDesign, t: &SimTrace) -> Vec<BitStream> {
    d.source_inputs()
        .iter()
        .map(|x| t.column(x).expect("source input in trace").clone())
        .collect()
}

/// The decoded outputs, which equal `f(x)` cycle by cycle.
fn truth_outputs(d: &PartitionedDesign, t: &SimTrace) -> Vec<BitStream> {
    d.decoded_outputs()
        .iter()
        .map(|z| t.column(z).expect("decoded output in trace").clone())
        .collect()
}

/// Mutual information of every tapped wire against every true input and
/// output, of each requested wire pair's XOR against the XOR of the inputs
/// they encode, and the accuracy of the standard strategies.
///
/// Estimates are meaningful for uniform stimulus and at least 10^4 cycles.
pub fn leak_report(
    d: &PartitionedDesign,
    t: &SimTrace,
    pairs: &[(String, String)],
) -> Result<LeakReport, TrojanError> {
    leak_report_isolated(d, t, pairs, Isolation::All)
}

/// [`leak_report`] for a Trojan restricted by `isolation`; strategies only
/// use the replicas it can see.
pub fn leak_report_isolated(
    d: &PartitionedDesign,
    t: &SimTrace,
    pairs: &[(String, String)],
    isolation: Isolation,
) -> Result<LeakReport, TrojanError> {
    let l = tap(d, t, isolation)?;
    let xs = truth_inputs(d, t);
    let fs = truth_outputs(d, t);

    let wires = l
        .wires
        .par_iter()
        .zip(&l.columns)
        .map(|(w, col)| {
            let input = d
                .source_inputs()
                .iter()
                .zip(&xs)
                .map(|(name, x)| Ok((name.clone(), mutual_information(col, x)?)))
                .collect::<Result<_, TrojanError>>()?;
            let output = d
                .source_outputs()
                .iter()
                .zip(&fs)
                .map(|(name, f)| Ok((name.clone(), mutual_information(col, f)?)))
                .collect::<Result<_, TrojanError>>()?;
            Ok((w.clone(), WireLeak { mi_vs: MiVs { input, output } }))
        })
        .collect::<Result<BTreeMap<_, _>, TrojanError>>()?;

    let input_index = |w: &str| -> Result<usize, TrojanError> {
        let x = l
            .source_of(w)
            .ok_or_else(|| TrojanError::NotAnInputPort(w.to_string()))?;
        Ok(d.source_inputs().iter().position(|s| s == x).unwrap())
    };
    let mut pair_rows = Vec::new();
    let mut strategies = Vec::new();
    for (a, b) in pairs {
        let seen = l.column(a)?.xor(l.column(b)?);
        let (i, j) = (input_index(a)?, input_index(b)?);
        let truth = xs[i].xor(&xs[j]);
        pair_rows.push(PairLeak {
            a: a.clone(),
            b: b.clone(),
            mi: mutual_information(&seen, &truth)?,
        });
        strategies.push(StrategyScore {
            name: format!("gradient:{a}^{b}"),
            accuracy: accuracy(&seen, &truth),
        });
    }

    let visible: Vec<usize> = l.ports.iter().map(|(k, _)| *k).collect();
    for &k in &visible {
        for (o, f) in d.source_outputs().iter().zip(&fs) {
            let g = reconstruct(&l, &Strategy::PickReplica { replica: k, output: o.clone() })?;
            strategies.push(StrategyScore {
                name: format!("pick-replica:{k}:{o}"),
                accuracy: accuracy(&g[0], f),
            });
        }
    }
    let first = d.replica(visible[0]).expect("visible replica");
    for (i, w) in first.inputs.iter().enumerate() {
        if d.config().contains(&d.source_inputs()[i]) {
            let g = reconstruct(&l, &Strategy::InputEcho { wire: w.clone() })?;
            strategies.push(StrategyScore {
                name: format!("input-echo:{w}"),
                accuracy: accuracy(&g[0], &xs[i]),
            });
        }
    }

    Ok(LeakReport {
        wires,
        pairs: pair_rows,
        strategies,
    })
}

/// Same-group or cross-group pairs of replica-0 input wires over the
/// randomized inputs.
pub fn input_pairs(d: &PartitionedDesign, same_group: bool) -> Vec<(String, String)> {
    input_pairs_of(d, 0, same_group)
}

/// [`input_pairs`] on replica `k`'s input wires.
pub fn input_pairs_of(d: &PartitionedDesign, k: usize, same_group: bool) -> Vec<(String, String)> {
    let cfg = d.config();
    let rep0 = d.replica(k).expect("replica index in range");
    let s: Vec<(usize, &String)> = d
        .source_inputs()
        .iter()
        .enumerate()
        .filter(|(_, x)| cfg.contains(x))
        .collect();
    let mut out = Vec::new();
    for (a, &(i, xi)) in s.iter().enumerate() {
        for &(j, xj) in &s[a + 1..] {
            if (cfg.group_of(xi) == cfg.group_of(xj)) == same_group {
                out.push((rep0.inputs[i].clone(), rep0.inputs[j].clone()));
            }
        }
    }
    out
}

/// A single-cycle trigger on the replica-0 input bus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerSpec {
    watched: Vec<String>,
    pattern: Vec<bool>,
}

impl TriggerSpec {
    pub fn new(watched: Vec<String>, pattern: Vec<bool>) -> Result<Self, TrojanError> {
        if watched.len() != pattern.len() {
            return Err(TrojanError::TriggerWidth {
                wires: watched.len(),
                pattern: pattern.len(),
            });
        }
        Ok(Self { watched, pattern })
    }

    /// Watches all of replica 0's inputs.
    pub fn full_bus(d: &PartitionedDesign, pattern: Vec<bool>) -> Result<Self, TrojanError> {
        Self::new(d.replica(0).expect("replica 0").inputs.clone(), pattern)
    }

    pub fn watched(&self) -> &[String] {
        &self.watched
    }

    pub fn pattern(&self) -> &[bool] {
        &self.pattern
    }

    fn sources(&self, d: &PartitionedDesign) -> Result<Vec<usize>, TrojanError> {
        let rep0 = d.replica(0).expect("replica 0");
        self.watched
            .iter()
            .map(|w| {
                rep0.inputs
                    .iter()
                    .position(|p| p == w)
                    .ok_or_else(|| TrojanError::NotWatchable(w.clone()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriggerStats {
    #[serde(skip)]
    pub fired: BitStream,
    pub cycles: usize,
    pub fires: usize,
    pub rate: f64,
    /// Mean over cycles of the fraction of `r` values that would fire.
    pub analytic_rate: f64,
}

impl TriggerStats {
    /// Binomial standard deviation of `rate` around `analytic_rate`.
    pub fn sigma(&self) -> f64 {
        let p = self.analytic_rate;
        (p * (1.0 - p) / self.cycles.max(1) as f64).sqrt()
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.rate - self.analytic_rate).abs() <= k * self.sigma()
    }
}

/// Fraction of the `2^G` random vectors for which the watched bus shows
/// `pattern` while the source inputs hold `x`.
pub fn analytic_fire_rate(
    d: &PartitionedDesign,
    trig: &TriggerSpec,
    x: &[bool],
) -> Result<f64, TrojanError> {
    let src = trig.sources(d)?;
    let g = d.groups();
    let hits = (0..1usize << g)
        .filter(|r| {
            src.iter().zip(&trig.pattern).all(|(&i, &p)| {
                let mask = d
                    .config()
                    .group_of(&d.source_inputs()[i])
                    .is_some_and(|grp| (r >> (grp - 1)) & 1 == 1);
                (x[i] ^ mask) == p
            })
        })
        .count();
    Ok(hits as f64 / (1usize << g) as f64)
}

/// Fire rate measured by evaluating the design for every `r` at fixed `x`.
pub fn exhaustive_fire_rate(
    d: &PartitionedDesign,
    trig: &TriggerSpec,
    x: &[bool],
) -> Result<f64, TrojanError> {
    trig.sources(d)?;
    let prog = d.netlist().program();
    let watched: Vec<usize> = trig
        .watched
        .iter()
        .map(|w| prog.wire_index(w).expect("replica input exists"))
        .collect();
    let g = d.groups();
    let hits = (0..1usize << g)
        .filter(|r| {
            let mut bits = x.to_vec();
            bits.extend((0..g).map(|j| (r >> j) & 1 == 1));
            let v = prog.eval_bits(&bits);
            watched.iter().zip(&trig.pattern).all(|(&w, &p)| v[w] == p)
        })
        .count();
    Ok(hits as f64 / (1usize << g) as f64)
}

/// Simulates `d` and records on which cycles the trigger fires.
pub fn trigger_experiment(
    d: &PartitionedDesign,
    trig: &TriggerSpec,
    stim: &Stimulus,
    rng: RngSpec,
) -> Result<TriggerStats, TrojanError> {
    trig.sources(d)?;
    let t = simulate(d, stim, rng)?;
    let cycles = t.cycles();
    let mut fired = BitStream::zeros(cycles).not();
    for (w, &p) in trig.watched.iter().zip(&trig.pattern) {
        let col = t.column(w).expect("replica input in trace");
        let hit = if p { col.clone() } else { col.not() };
        fired = BitStream::from_words(
            fired.words().iter().zip(hit.words()).map(|(a, b)| a & b).collect(),
            cycles,
        );
    }
    let mut analytic = 0.0;
    for c in 0..cycles {
        analytic += analytic_fire_rate(d, trig, &t.inputs_at(c))?;
    }
    let fires = fired.count_ones();
    Ok(TriggerStats {
        cycles,
        fires,
        rate: if cycles == 0 { 0.0 } else { fires as f64 / cycles as f64 },
        analytic_rate: if cycles == 0 { 0.0 } else { analytic / cycles as f64 },
        fired,
    })
}
