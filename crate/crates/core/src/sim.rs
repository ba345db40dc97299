//! Random-bit generation, multi-cycle simulation and equivalence checking.
//!
//! Simulation is bit-sliced: 64 cycles are evaluated per pass, one cycle per
//! lane. The random bits for cycle `c` are stream bits `c*G .. c*G+G-1`
//! (`r1` first), so a trace is a pure function of design, stimulus and seed.

use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{bits_msb_first, format_bits, parse_bits, BitStream};
use crate::netlist::{Netlist, Program};
use crate::recordize::PartitionedDesign;

/// Largest `inputs + random bits` that exhaustive checking will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 22;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("stimulus has {got} bits per cycle, design has {expected} inputs")]
    Width { expected: usize, got: usize },
    #[error("stimulus line {line}: {message}")]
    StimulusSyntax { line: usize, message: String },
    #[error("exhaustive check over {bits} bits exceeds the limit of {EXHAUSTIVE_LIMIT}")]
    TooManyBits { bits: usize },
    #[error("source inputs differ: netlist has {original:?}, design expects {design:?}")]
    InputMismatch {
        original: Vec<String>,
        design: Vec<String>,
    },
    #[error("netlist has {original} outputs, design decodes {design}")]
    OutputMismatch { original: usize, design: usize },
}

/// Seed for the SplitMix64 random-bit stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn bit_source(self) -> BitSource {
        BitSource {
            rng: SplitMix64::new(self.seed),
            word: 0,
            left: 0,
        }
    }
}

/// SplitMix64 (Steele, Lea & Flood). Not cryptographic.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Consumes a SplitMix64 stream one bit at a time, LSB first per word.
#[derive(Debug, Clone)]
pub struct BitSource {
    rng: SplitMix64,
    word: u64,
    left: u32,
}

impl BitSource {
    pub fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

/// First `n` bits of the stream for `spec`.
pub fn rng_bits(spec: RngSpec, n: usize) -> BitStream {
    let mut src = spec.bit_source();
    BitStream::from_fn(n, |_| src.next_bit())
}

/// Per-cycle values for the source inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stimulus {
    /// One vector per cycle, first declared input first.
    Vectors(Vec<Vec<bool>>),
    /// `count` uniform cycles; cycle `c`, input `i` takes stream bit
    /// `c*width + i` of SplitMix64(`seed`).
    Random { count: usize, seed: u64 },
}

impl Stimulus {
    pub fn random(count: usize, seed: u64) -> Self {
        Stimulus::Random { count, seed }
    }

    /// The same vector every cycle.
    pub fn constant(vector: Vec<bool>, count: usize) -> Self {
        Stimulus::Vectors(vec![vector; count])
    }

    /// Parses the stimulus file format: one binary string per line,
    /// `#` comments, blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut rows = Vec::new();
        let mut width = None;
        for (i, raw) in text.lines().enumerate() {
            let code = raw.split('#').next().unwrap().trim();
            if code.is_empty() {
                continue;
            }
            let bits = parse_bits(code).ok_or_else(|| SimError::StimulusSyntax {
                line: i + 1,
                message: format!("`{code}` is not a binary string"),
            })?;
            match width {
                None => width = Some(bits.len()),
                Some(w) if w != bits.len() => {
                    return Err(SimError::StimulusSyntax {
                        line: i + 1,
                        message: format!("{} bits, earlier lines have {w}", bits.len()),
                    })
                }
                _ => {}
            }
            rows.push(bits);
        }
        Ok(Stimulus::Vectors(rows))
    }

    pub fn cycles(&self) -> usize {
        match self {
            Stimulus::Vectors(v) => v.len(),
            Stimulus::Random { count, .. } => *count,
        }
    }

    /// One column per input.
    pub fn columns(&self, width: usize) -> Result<Vec<BitStream>, SimError> {
        match self {
            Stimulus::Vectors(rows) => {
                if let Some(bad) = rows.iter().find(|r| r.len() != width) {
                    return Err(SimError::Width {
                        expected: width,
                        got: bad.len(),
                    });
                }
                Ok((0..width)
                    .map(|i| BitStream::from_fn(rows.len(), |c| rows[c][i]))
                    .collect())
            }
            Stimulus::Random { count, seed } => {
                let mut cols = vec![BitStream::zeros(*count); width];
                let mut src = RngSpec::new(*seed).bit_source();
                for c in 0..*count {
                    for col in cols.iter_mut() {
                        col.set(c, src.next_bit());
                    }
                }
                Ok(cols)
            }
        }
    }
}

/// Full per-cycle wire valuation of a simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    design: String,
    cycles: usize,
    wires: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<BitStream>,
    source_inputs: Vec<String>,
    random_wires: Vec<String>,
}

impl SimTrace {
    pub fn design_name(&self) -> &str {
        &self.design
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn wires(&self) -> &[String] {
        &self.wires
    }

    pub fn column(&self, wire: &str) -> Option<&BitStream> {
        self.index.get(wire).map(|&i| &self.columns[i])
    }

    pub fn value(&self, wire: &str, cycle: usize) -> Option<bool> {
        self.column(wire).map(|c| c.get(cycle))
    }

    pub fn source_inputs(&self) -> &[String] {
        &self.source_inputs
    }

    pub fn random_wires(&self) -> &[String] {
        &self.random_wires
    }

    pub fn inputs_at(&self, cycle: usize) -> Vec<bool> {
        self.bits_at(&self.source_inputs, cycle)
    }

    pub fn random_at(&self, cycle: usize) -> Vec<bool> {
        self.bits_at(&self.random_wires, cycle)
    }

    pub fn bits_at<S: AsRef<str>>(&self, wires: &[S], cycle: usize) -> Vec<bool> {
        wires
            .iter()
            .map(|w| self.value(w.as_ref(), cycle).expect("wire in trace"))
            .collect()
    }

    /// Writes `cycle,wire,value` rows.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "cycle,wire,value")?;
        for c in 0..self.cycles {
            for (w, col) in self.wires.iter().zip(&self.columns) {
                writeln!(out, "{c},{w},{}", col.get(c) as u8)?;
            }
        }
        Ok(())
    }

    pub fn summary(&self, outputs: &[String]) -> TraceSummary {
        let rate = |w: &String| {
            let c = self.column(w).expect("wire in trace");
            if self.cycles == 0 {
                0.0
            } else {
                c.count_ones() as f64 / self.cycles as f64
            }
        };
        TraceSummary {
            design: self.design.clone(),
            cycles: self.cycles,
            wires: self.wires.len(),
            random_one_rate: self.random_wires.iter().map(|w| (w.clone(), rate(w))).collect(),
            output_one_rate: outputs.iter().map(|w| (w.clone(), rate(w))).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub design: String,
    pub cycles: usize,
    pub wires: usize,
    pub random_one_rate: Vec<(String, f64)>,
    pub output_one_rate: Vec<(String, f64)>,
}

fn run(netlist: &Netlist, input_cols: &[BitStream], cycles: usize) -> Vec<BitStream> {
    let prog: &Program = netlist.program();
    let mut cols = vec![BitStream::new(); prog.wire_count()];
    let chunks = cycles.div_ceil(64);
    let mut words = vec![0u64; input_cols.len()];
    for k in 0..chunks {
        let count = (cycles - k * 64).min(64);
        for (w, col) in words.iter_mut().zip(input_cols) {
            *w = col.words()[k];
        }
        let vals = prog.eval_words(&words);
        for (col, v) in cols.iter_mut().zip(vals) {
            col.push_word(v, count);
        }
    }
    cols
}

fn make_trace(
    netlist: &Netlist,
    input_cols: &[BitStream],
    cycles: usize,
    source_inputs: Vec<String>,
    random_wires: Vec<String>,
) -> SimTrace {
    let columns = run(netlist, input_cols, cycles);
    let wires = netlist.wire_names().to_vec();
    let index = wires.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    SimTrace {
        design: netlist.name().to_string(),
        cycles,
        wires,
        index,
        columns,
        source_inputs,
        random_wires,
    }
}

/// Random-bit columns `r1..rG` for `cycles` cycles.
pub fn random_columns(rng: RngSpec, groups: usize, cycles: usize) -> Vec<BitStream> {
    let stream = rng_bits(rng, cycles * groups);
    (0..groups)
        .map(|j| BitStream::from_fn(cycles, |c| stream.get(c * groups + j)))
        .collect()
}

/// Runs a design for every stimulus cycle with fresh random bits per cycle.
pub fn simulate(
    d: &PartitionedDesign,
    stim: &Stimulus,
    rng: RngSpec,
) -> Result<SimTrace, SimError> {
    let cycles = stim.cycles();
    let mut cols = stim.columns(d.source_inputs().len())?;
    cols.extend(random_columns(rng, d.groups(), cycles));
    Ok(make_trace(
        d.netlist(),
        &cols,
        cycles,
        d.source_inputs().to_vec(),
        d.random_wires().to_vec(),
    ))
}

/// Runs a plain netlist; every primary input comes from the stimulus.
pub fn simulate_netlist(n: &Netlist, stim: &Stimulus) -> Result<SimTrace, SimError> {
    let cols = stim.columns(n.inputs().len())?;
    Ok(make_trace(n, &cols, stim.cycles(), n.inputs().to_vec(), Vec::new()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub x: Vec<bool>,
    pub r: Vec<bool>,
    pub expected: Vec<bool>,
    pub got: Vec<bool>,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "x={} r={} expected={} got={}",
            format_bits(&self.x),
            format_bits(&self.r),
            format_bits(&self.expected),
            format_bits(&self.got)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass { cases: u64 },
    Fail(Counterexample),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

/// Compares a design's decoded outputs with the original netlist.
///
/// Exhaustive mode enumerates `x` (first input most significant) in the
/// high bits and `r` (with `r1` least significant) in the low bits; the
/// reported counterexample is the first failing case in that order no
/// matter how the sweep is split across threads.
pub fn verify_equivalence(
    original: &Netlist,
    d: &PartitionedDesign,
    mode: CheckMode,
) -> Result<Verdict, SimError> {
    if original.inputs() != d.source_inputs() {
        return Err(SimError::InputMismatch {
            original: original.inputs().to_vec(),
            design: d.source_inputs().to_vec(),
        });
    }
    if original.outputs().len() != d.decoded_outputs().len() {
        return Err(SimError::OutputMismatch {
            original: original.outputs().len(),
            design: d.decoded_outputs().len(),
        });
    }
    let n = original.inputs().len();
    let g = d.groups();
    let checker = Checker::new(original, d);
    match mode {
        CheckMode::Exhaustive => {
            let bits = n + g;
            if bits > EXHAUSTIVE_LIMIT {
                return Err(SimError::TooManyBits { bits });
            }
            let cases = 1u64 << bits;
            let chunks = cases.div_ceil(64);
            let first = (0..chunks).into_par_iter().find_map_first(|k| {
                let base = k * 64;
                let count = (cases - base).min(64) as usize;
                let lanes: Vec<(u64, u64)> = (0..count as u64)
                    .map(|l| {
                        let idx = base + l;
                        (idx >> g, idx & ((1 << g) - 1))
                    })
                    .collect();
                checker.first_failure(&lanes, n, g)
            });
            Ok(match first {
                None => Verdict::Pass { cases },
                Some((x, r)) => Verdict::Fail(checker.counterexample(x, r, n, g)),
            })
        }
        CheckMode::Sampled { samples, seed } => {
            let mut src = RngSpec::new(seed).bit_source();
            let mut done = 0;
            while done < samples {
                let count = (samples - done).min(64);
                let lanes: Vec<(u64, u64)> = (0..count)
                    .map(|_| {
                        let x = (0..n).fold(0u64, |a, _| (a << 1) | src.next_bit() as u64);
                        let r = (0..g).fold(0u64, |a, j| a | (src.next_bit() as u64) << j);
                        (x, r)
                    })
                    .collect();
                if let Some((x, r)) = checker.first_failure(&lanes, n, g) {
                    return Ok(Verdict::Fail(checker.counterexample(x, r, n, g)));
                }
                done += count;
            }
            Ok(Verdict::Pass {
                cases: samples as u64,
            })
        }
    }
}

struct Checker<'a> {
    original: &'a Netlist,
    design: &'a Netlist,
    decoded: Vec<usize>,
}

impl<'a> Checker<'a> {
    fn new(original: &'a Netlist, d: &'a PartitionedDesign) -> Self {
        let design = d.netlist();
        let decoded = d
            .decoded_outputs()
            .iter()
            .map(|w| design.program().wire_index(w).expect("decoded output exists"))
            .collect();
        Self {
            original,
            design,
            decoded,
        }
    }

    /// Lanes are `(x, r)` pairs; `x` packed first-input-most-significant,
    /// `r` packed with `r1` as bit 0.
    fn first_failure(&self, lanes: &[(u64, u64)], n: usize, g: usize) -> Option<(u64, u64)> {
        let x_word = |i: usize| {
            lanes
                .iter()
                .enumerate()
                .fold(0u64, |w, (l, &(x, _))| w | ((x >> (n - 1 - i)) & 1) << l)
        };
        let r_word = |j: usize| {
            lanes
                .iter()
                .enumerate()
                .fold(0u64, |w, (l, &(_, r))| w | ((r >> j) & 1) << l)
        };
        let xs: Vec<u64> = (0..n).map(x_word).collect();
        let mut all = xs.clone();
        all.extend((0..g).map(r_word));
        let ov = self.original.program().eval_words(&xs);
        let dv = self.design.program().eval_words(&all);
        let valid = if lanes.len() == 64 { !0 } else { (1u64 << lanes.len()) - 1 };
        let diff = self
            .original
            .program()
            .output_indices()
            .iter()
            .zip(&self.decoded)
            .fold(0u64, |acc, (&o, &z)| acc | (ov[o] ^ dv[z]))
            & valid;
        (diff != 0).then(|| lanes[diff.trailing_zeros() as usize])
    }

    fn counterexample(&self, x: u64, r: u64, n: usize, g: usize) -> Counterexample {
        let xb = bits_msb_first(x, n);
        let rb: Vec<bool> = (0..g).map(|j| (r >> j) & 1 == 1).collect();
        let expected = self.original.evaluate_bits(&xb).expect("width checked");
        let mut all = xb.clone();
        all.extend(&rb);
        let vals = self.design.program().eval_bits(&all);
        let got = self.decoded.iter().map(|&i| vals[i]).collect();
        Counterexample {
            x: xb,
            r: rb,
            expected,
            got,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{fixtures, parse_netlist};
    use crate::recordize::{transform, RecordConfig};

    /// Straight transcription of the published SplitMix64 reference code,
    /// kept separate from the implementation above.
    fn splitmix_reference(seed: u64, n: usize) -> Vec<u64> {
        let mut x = seed;
        (0..n)
            .map(|_| {
                x = x.wrapping_add(0x9e3779b97f4a7c15);
                let mut z = x;
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                z ^ (z >> 31)
            })
            .collect()
    }

    #[test]
    fn splitmix_seed_zero_vector() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(rng.next_u64(), 0x6E789E6AA1B965F4);
        let mut rng = SplitMix64::new(12345);
        assert_eq!(
            (0..8).map(|_| rng.next_u64()).collect::<Vec<_>>(),
            splitmix_reference(12345, 8)
        );
    }

    #[test]
    fn bits_are_lsb_first() {
        let bits = rng_bits(RngSpec::new(0), 64);
        assert!(bits.get(0));
        assert_eq!(bits.words()[0], 0xE220A8397B1DCDAF);
        assert!(rng_bits(RngSpec::new(3), 0).is_empty());
        assert_eq!(rng_bits(RngSpec::new(9), 300), rng_bits(RngSpec::new(9), 300));
    }

    #[test]
    fn stimulus_file_parsing() {
        let s = Stimulus::parse("# header\n101\n\n011 # trailing\n").unwrap();
        assert_eq!(s.cycles(), 2);
        let cols = s.columns(3).unwrap();
        assert!(cols[0].get(0) && !cols[0].get(1));
        assert_eq!(
            s.columns(4).unwrap_err(),
            SimError::Width {
                expected: 4,
                got: 3
            }
        );
        assert!(matches!(
            Stimulus::parse("10\n1\n"),
            Err(SimError::StimulusSyntax { line: 2, .. })
        ));
        assert!(matches!(
            Stimulus::parse("1x\n"),
            Err(SimError::StimulusSyntax { line: 1, .. })
        ));
    }

    #[test]
    fn and_design_all_ones_decodes_to_one() {
        let n = fixtures::and_tree(2).unwrap();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        for seed in 0..4 {
            let t = simulate(&d, &Stimulus::constant(vec![true, true], 200), RngSpec::new(seed))
                .unwrap();
            assert_eq!(t.column("__z.y").unwrap().count_ones(), 200);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let n = fixtures::maj9();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        let s = Stimulus::random(300, 5);
        assert_eq!(
            simulate(&d, &s, RngSpec::new(1)).unwrap(),
            simulate(&d, &s, RngSpec::new(1)).unwrap()
        );
    }

    #[test]
    fn width_mismatch() {
        let n = fixtures::maj9();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        let err = simulate(&d, &Stimulus::constant(vec![true; 3], 2), RngSpec::new(0)).unwrap_err();
        assert_eq!(err, SimError::Width { expected: 9, got: 3 });
    }

    #[test]
    fn exhaustive_limit_enforced() {
        let n = fixtures::and_tree(22).unwrap();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        assert_eq!(
            verify_equivalence(&n, &d, CheckMode::Exhaustive).unwrap_err(),
            SimError::TooManyBits { bits: 23 }
        );
        assert!(verify_equivalence(
            &n,
            &d,
            CheckMode::Sampled {
                samples: 500,
                seed: 1
            }
        )
        .unwrap()
        .passed());
    }

    #[test]
    fn removed_decoder_yields_counterexample_with_r_set() {
        let n = fixtures::and_tree(2).unwrap();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        let text = d.to_text().replace("xor __z.y __y.y __r1", "buf __z.y __y.y");
        let bad = PartitionedDesign::from_netlist(parse_netlist(&text).unwrap()).unwrap();
        match verify_equivalence(&n, &bad, CheckMode::Exhaustive).unwrap() {
            Verdict::Fail(c) => {
                assert_eq!(c.r, vec![true]);
                assert_ne!(c.expected, c.got);
                // first in enumeration order: x=00, r=1
                assert_eq!(c.x, vec![false, false]);
            }
            v => panic!("expected a counterexample, got {v:?}"),
        }
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let n = fixtures::and_tree(2).unwrap();
        let d = transform(&n, &RecordConfig::single(&n)).unwrap();
        assert!(matches!(
            verify_equivalence(&fixtures::maj9(), &d, CheckMode::Exhaustive),
            Err(SimError::InputMismatch { .. })
        ));
    }
}
