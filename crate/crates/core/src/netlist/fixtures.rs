//! Benchmark netlists.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{wires, Gate, GateKind, Netlist};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FixtureError {
    #[error("unknown fixture `{0}` (expected aes-sbox, maj9, adder4, inverter or and-tree-<n>)")]
    Unknown(String),
    #[error("and-tree needs at least 2 inputs, got {0}")]
    TreeTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    AesSbox,
    Maj9,
    Adder4,
    AndTree(usize),
    Inverter,
}

impl FromStr for FixtureKind {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, FixtureError> {
        match s {
            "aes-sbox" => Ok(FixtureKind::AesSbox),
            "maj9" => Ok(FixtureKind::Maj9),
            "adder4" => Ok(FixtureKind::Adder4),
            "inverter" => Ok(FixtureKind::Inverter),
            _ => {
                let n = s
                    .strip_prefix("and-tree-")
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| FixtureError::Unknown(s.to_string()))?;
                Ok(FixtureKind::AndTree(n))
            }
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixtureKind::AesSbox => f.write_str("aes-sbox"),
            FixtureKind::Maj9 => f.write_str("maj9"),
            FixtureKind::Adder4 => f.write_str("adder4"),
            FixtureKind::AndTree(n) => write!(f, "and-tree-{n}"),
            FixtureKind::Inverter => f.write_str("inverter"),
        }
    }
}

pub fn fixture_generate(kind: FixtureKind) -> Result<Netlist, FixtureError> {
    Ok(match kind {
        FixtureKind::AesSbox => aes_sbox(),
        FixtureKind::Maj9 => maj9(),
        FixtureKind::Adder4 => adder4(),
        FixtureKind::AndTree(n) => and_tree(n)?,
        FixtureKind::Inverter => inverter(),
    })
}

/// Parses a fixture name and generates it.
pub fn fixture(name: &str) -> Result<Netlist, FixtureError> {
    fixture_generate(name.parse()?)
}

pub fn inverter() -> Netlist {
    Netlist::new(
        "inverter",
        wires(&["a"]),
        wires(&["y"]),
        vec![Gate::new(GateKind::Not, "y", wires(&["a"]))],
    )
    .expect("valid fixture")
}

fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let carry = a & 0x80;
        a <<= 1;
        if carry != 0 {
            a ^= 0x1b;
        }
        b >>= 1;
    }
    p
}

/// The AES substitution table, from the GF(2^8) inverse and affine map.
pub fn aes_sbox_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    for (x, slot) in table.iter_mut().enumerate() {
        let x = x as u8;
        let inv = if x == 0 {
            0
        } else {
            (1..=255u8).find(|&y| gf_mul(x, y) == 1).unwrap()
        };
        *slot = inv
            ^ inv.rotate_left(1)
            ^ inv.rotate_left(2)
            ^ inv.rotate_left(3)
            ^ inv.rotate_left(4)
            ^ 0x63;
    }
    table
}

/// 8-in/8-out S-box as one minterm sum-of-products per output bit.
/// Inputs `x7..x0` and outputs `y7..y0`, most significant first.
pub fn aes_sbox() -> Netlist {
    let table = aes_sbox_table();
    let inputs: Vec<String> = (0..8).rev().map(|i| format!("x{i}")).collect();
    let outputs: Vec<String> = (0..8).rev().map(|i| format!("y{i}")).collect();
    let mut gates: Vec<Gate> = (0..8)
        .rev()
        .map(|i| Gate::new(GateKind::Not, format!("nx{i}"), vec![format!("x{i}")]))
        .collect();
    for bit in (0..8).rev() {
        let mut terms = Vec::new();
        for (m, &entry) in table.iter().enumerate() {
            if (entry >> bit) & 1 == 0 {
                continue;
            }
            let lits = (0..8)
                .rev()
                .map(|i| {
                    if (m >> i) & 1 == 1 {
                        format!("x{i}")
                    } else {
                        format!("nx{i}")
                    }
                })
                .collect();
            let name = format!("y{bit}.m{m:02x}");
            gates.push(Gate::new(GateKind::And, name.clone(), lits));
            terms.push(name);
        }
        gates.push(Gate::new(GateKind::Or, format!("y{bit}"), terms));
    }
    Netlist::new("aes_sbox", inputs, outputs, gates).expect("valid fixture")
}

/// Compare-exchange schedule selecting the median of nine values.
const MEDIAN9: [(usize, usize); 19] = [
    (1, 2),
    (4, 5),
    (7, 8),
    (0, 1),
    (3, 4),
    (6, 7),
    (1, 2),
    (4, 5),
    (7, 8),
    (0, 3),
    (5, 8),
    (4, 7),
    (3, 6),
    (1, 4),
    (2, 5),
    (4, 7),
    (4, 2),
    (6, 4),
    (4, 2),
];

/// Nine-input majority built from a median-of-9 selection network, where a
/// bit compare-exchange is an AND (min) and an OR (max). Inputs `x0..x8`
/// are a 3x3 window in raster order; the output is `maj`.
pub fn maj9() -> Netlist {
    let inputs: Vec<String> = (0..9).map(|i| format!("x{i}")).collect();
    let mut p = inputs.clone();
    let mut gates = Vec::new();
    for (k, &(a, b)) in MEDIAN9.iter().enumerate() {
        let lo = format!("s{k}.lo");
        let hi = format!("s{k}.hi");
        gates.push(Gate::new(GateKind::And, lo.clone(), vec![p[a].clone(), p[b].clone()]));
        gates.push(Gate::new(GateKind::Or, hi.clone(), vec![p[a].clone(), p[b].clone()]));
        p[a] = lo;
        p[b] = hi;
    }
    let median = p[4].clone();
    for g in &mut gates {
        if g.out == median {
            g.out = "maj".into();
        }
    }
    Netlist::new("maj9", inputs, wires(&["maj"]), gates)
        .expect("valid fixture")
        .pruned()
}

/// 4-bit ripple-carry adder. Inputs `a3..a0 b3..b0`, outputs `s4..s0`.
pub fn adder4() -> Netlist {
    let inputs: Vec<String> = ["a3", "a2", "a1", "a0", "b3", "b2", "b1", "b0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let outputs = wires(&["s4", "s3", "s2", "s1", "s0"]);
    let mut gates = vec![
        Gate::new(GateKind::Xor, "s0", wires(&["a0", "b0"])),
        Gate::new(GateKind::And, "c0", wires(&["a0", "b0"])),
    ];
    for i in 1..4 {
        let (a, b, cin) = (format!("a{i}"), format!("b{i}"), format!("c{}", i - 1));
        let p = format!("p{i}");
        gates.push(Gate::new(GateKind::Xor, p.clone(), vec![a.clone(), b.clone()]));
        gates.push(Gate::new(GateKind::Xor, format!("s{i}"), vec![p.clone(), cin.clone()]));
        gates.push(Gate::new(GateKind::And, format!("g{i}"), vec![a, b]));
        gates.push(Gate::new(GateKind::And, format!("h{i}"), vec![p, cin]));
        let cout = if i == 3 { "s4".to_string() } else { format!("c{i}") };
        gates.push(Gate::new(
            GateKind::Or,
            cout,
            vec![format!("g{i}"), format!("h{i}")],
        ));
    }
    Netlist::new("adder4", inputs, outputs, gates).expect("valid fixture")
}

/// Balanced tree of 2-input ANDs over `i0..i{n-1}` with output `y`.
pub fn and_tree(n: usize) -> Result<Netlist, FixtureError> {
    if n < 2 {
        return Err(FixtureError::TreeTooSmall(n));
    }
    let inputs: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
    let mut level = inputs.clone();
    let mut gates = Vec::new();
    let mut depth = 0;
    while level.len() > 1 {
        depth += 1;
        let mut next = Vec::new();
        for (k, pair) in level.chunks(2).enumerate() {
            if pair.len() == 2 {
                let out = format!("l{depth}.{k}");
                gates.push(Gate::new(GateKind::And, out.clone(), pair.to_vec()));
                next.push(out);
            } else {
                next.push(pair[0].clone());
            }
        }
        level = next;
    }
    let root = level.pop().unwrap();
    for g in &mut gates {
        if g.out == root {
            g.out = "y".into();
        }
    }
    Ok(Netlist::new(format!("and_tree_{n}"), inputs, wires(&["y"]), gates).expect("valid fixture"))
}
