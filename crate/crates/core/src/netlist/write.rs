use std::fmt::Write;

use super::{Gate, Netlist, Zone};

/// Canonical text: header, then gates in stored order, each followed by its
/// non-default attributes.
pub fn write_netlist(n: &Netlist) -> String {
    let mut s = String::new();
    writeln!(s, "module {}", n.name()).unwrap();
    if !n.inputs().is_empty() {
        writeln!(s, "input {}", n.inputs().join(" ")).unwrap();
    }
    if !n.outputs().is_empty() {
        writeln!(s, "output {}", n.outputs().join(" ")).unwrap();
    }
    for g in n.gates() {
        write_gate(&mut s, g);
    }
    s.push_str("end\n");
    s
}

pub(crate) fn write_gate(s: &mut String, g: &Gate) {
    s.push_str(g.kind.keyword());
    s.push(' ');
    s.push_str(&g.out);
    for w in &g.ins {
        s.push(' ');
        s.push_str(w);
    }
    s.push('\n');
    if g.zone == Zone::Untrusted {
        writeln!(s, "attr {} zone untrusted", g.out).unwrap();
    }
    if let Some(r) = g.replica {
        writeln!(s, "attr {} replica {r}", g.out).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_netlist, wires, Gate, GateKind, Netlist};
    use super::*;

    #[test]
    fn inverter_canonical_text() {
        let n = Netlist::new(
            "inv",
            wires(&["a"]),
            wires(&["y"]),
            vec![Gate::new(GateKind::Not, "y", wires(&["a"]))],
        )
        .unwrap();
        assert_eq!(write_netlist(&n), "module inv\ninput a\noutput y\nnot y a\nend\n");
    }

    #[test]
    fn zone_attributes_persist() {
        let n = Netlist::new(
            "z",
            wires(&["a", "b"]),
            wires(&["y"]),
            vec![Gate::new(GateKind::Xor, "y", wires(&["a", "b"])).untrusted(1)],
        )
        .unwrap();
        let text = write_netlist(&n);
        assert!(text.contains("attr y zone untrusted\n"));
        assert!(text.contains("attr y replica 1\n"));
        assert_eq!(parse_netlist(&text).unwrap(), n);
    }
}
