use std::collections::HashMap;

use super::{is_valid_wire_name, Gate, GateKind, Netlist, NetlistError, Zone};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in code.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &code[s..i],
                    column: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &code[s..],
            column: s + 1,
        });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn wire_name(line: usize, t: &Token<'_>) -> Result<String, NetlistError> {
    if is_valid_wire_name(t.text) {
        Ok(t.text.to_string())
    } else {
        Err(syntax(line, t.column, format!("invalid wire name `{}`", t.text)))
    }
}

struct Attr {
    line: usize,
    column: usize,
    wire: String,
    key: AttrKey,
}

enum AttrKey {
    Zone(Zone),
    Replica(u32),
}

/// Parses the line-oriented netlist format.
///
/// Syntax problems carry line and column; structural problems (duplicate
/// driver, undriven wire, cycle) carry the line of the offending statement.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let mut name: Option<String> = None;
    let mut ended = false;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut gates: Vec<Gate> = Vec::new();
    let mut attrs = Vec::new();
    let mut driver_line: HashMap<String, usize> = HashMap::new();
    let mut first_use: HashMap<String, usize> = HashMap::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };
        if ended {
            return Err(syntax(line, head.column, "statement after `end`"));
        }
        if name.is_none() && head.text != "module" {
            return Err(syntax(line, head.column, "expected `module <name>`"));
        }
        let args = &toks[1..];
        match head.text {
            "module" => {
                if name.is_some() {
                    return Err(syntax(line, head.column, "nested `module`"));
                }
                if args.len() != 1 {
                    return Err(syntax(line, head.column, "expected `module <name>`"));
                }
                name = Some(wire_name(line, &args[0])?);
            }
            "end" => {
                if !args.is_empty() {
                    return Err(syntax(line, args[0].column, "unexpected token after `end`"));
                }
                ended = true;
            }
            "input" | "output" => {
                if args.is_empty() {
                    return Err(syntax(line, head.column, "expected at least one wire"));
                }
                for t in args {
                    let w = wire_name(line, t)?;
                    if head.text == "input" {
                        if driver_line.insert(w.clone(), line).is_some() {
                            return Err(dup(line, w));
                        }
                        inputs.push(w);
                    } else {
                        first_use.entry(w.clone()).or_insert(line);
                        outputs.push(w);
                    }
                }
            }
            "attr" => {
                if args.len() != 3 {
                    return Err(syntax(
                        line,
                        head.column,
                        "expected `attr <wire> zone|replica <value>`",
                    ));
                }
                let wire = wire_name(line, &args[0])?;
                let key = match args[1].text {
                    "zone" => match args[2].text {
                        "trusted" => AttrKey::Zone(Zone::Trusted),
                        "untrusted" => AttrKey::Zone(Zone::Untrusted),
                        other => {
                            return Err(syntax(
                                line,
                                args[2].column,
                                format!("unknown zone `{other}`"),
                            ))
                        }
                    },
                    "replica" => AttrKey::Replica(args[2].text.parse().map_err(|_| {
                        syntax(line, args[2].column, "replica index must be an integer")
                    })?),
                    other => {
                        return Err(syntax(
                            line,
                            args[1].column,
                            format!("unknown attribute `{other}`"),
                        ))
                    }
                };
                attrs.push(Attr {
                    line,
                    column: args[0].column,
                    wire,
                    key,
                });
            }
            kw => {
                let kind: GateKind = kw
                    .parse()
                    .map_err(|_| syntax(line, head.column, format!("unknown statement `{kw}`")))?;
                let Some(out_tok) = args.first() else {
                    return Err(syntax(line, head.column, "missing output wire"));
                };
                let out = wire_name(line, out_tok)?;
                let ins = args[1..]
                    .iter()
                    .map(|t| wire_name(line, t))
                    .collect::<Result<Vec<_>, _>>()?;
                if !kind.arity_ok(ins.len()) {
                    return Err(NetlistError::AtLine {
                        line,
                        source: Box::new(NetlistError::BadArity {
                            wire: out,
                            kind,
                            expected: kind.arity_text(),
                            got: ins.len(),
                        }),
                    });
                }
                if driver_line.insert(out.clone(), line).is_some() {
                    return Err(dup(line, out));
                }
                for w in &ins {
                    first_use.entry(w.clone()).or_insert(line);
                }
                gates.push(Gate::new(kind, out, ins));
            }
        }
    }

    let Some(name) = name else {
        return Err(syntax(last_line.max(1), 1, "missing `module` statement"));
    };
    if !ended {
        return Err(syntax(last_line.max(1), 1, "missing `end`"));
    }

    let by_out: HashMap<String, usize> = gates
        .iter()
        .enumerate()
        .map(|(i, g)| (g.out.clone(), i))
        .collect();
    for a in attrs {
        let Some(&gi) = by_out.get(&a.wire) else {
            return Err(syntax(
                a.line,
                a.column,
                format!("attribute on `{}`, which is not a gate output", a.wire),
            ));
        };
        match a.key {
            AttrKey::Zone(z) => gates[gi].zone = z,
            AttrKey::Replica(r) => gates[gi].replica = Some(r),
        }
    }

    Netlist::new(name, inputs, outputs, gates).map_err(|e| {
        let line = match &e {
            NetlistError::Cycle { wire } | NetlistError::DuplicateDriver { wire } => {
                driver_line.get(wire).copied()
            }
            NetlistError::Undriven { wire } => first_use.get(wire).copied(),
            _ => None,
        };
        match line {
            Some(line) => NetlistError::AtLine {
                line,
                source: Box::new(e),
            },
            None => e,
        }
    })
}

fn dup(line: usize, wire: String) -> NetlistError {
    NetlistError::AtLine {
        line,
        source: Box::new(NetlistError::DuplicateDriver { wire }),
    }
}
