//! Line-oriented text format for circuits and partition schemes.
//!
//! Circuit:
//!
//! ```text
//! circuit n=<n> depth=<D> alphabet_bits=<bits> semiring=<plus-times:p|min-plus:inf|wrapping:bits>
//! <layer> <index> <func> <fanin> <layer>:<index> ...
//! ```
//!
//! `func` is one of `identity`, `copy`, `sum`, `sop`, `lin:<c0>,<c1>,...` or
//! `opaque`. Gate lines appear in layer order, then index order. Opaque gates
//! are written for inspection but cannot be read back.
//!
//! Scheme:
//!
//! ```text
//! scheme n=<n> group_size=<g> layers=<L>
//! part <layer> <node> <gate> ...
//! piece <layer> <node> <j> <gate|-> ...
//! ```
//!
//! `-` marks a virtual zero slot. Blank lines and lines starting with `#` are ignored.

use super::{CircuitError, Gate, GateFn, LayeredCircuit, PartitionScheme, Semiring, WireRef};
use super::partition::LayerPartition;
use std::fmt::Write;

pub fn write_circuit(circuit: &LayeredCircuit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "circuit n={} depth={} alphabet_bits={} semiring={}",
        circuit.n,
        circuit.depth(),
        circuit.alphabet_bits,
        circuit.semiring
    );
    for (l, layer) in circuit.layers.iter().enumerate() {
        for (i, g) in layer.iter().enumerate() {
            let func = match &g.func {
                GateFn::LinearCombination(c) => {
                    let cs: Vec<String> = c.iter().map(u64::to_string).collect();
                    format!("lin:{}", cs.join(","))
                }
                f => f.name().to_string(),
            };
            let _ = write!(out, "{l} {i} {func} {}", g.inputs.len());
            for w in &g.inputs {
                let _ = write!(out, " {}:{}", w.layer, w.index);
            }
            out.push('\n');
        }
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Parse { line, msg: msg.into() }
}

fn header_fields<'a>(line: usize, text: &'a str, tag: &str) -> Result<Vec<(&'a str, &'a str)>, CircuitError> {
    let mut toks = text.split_whitespace();
    if toks.next() != Some(tag) {
        return Err(perr(line, format!("expected `{tag}` header")));
    }
    toks.map(|t| t.split_once('=').ok_or_else(|| perr(line, format!("bad header field `{t}`"))))
        .collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str, line: usize) -> Result<&'a str, CircuitError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| perr(line, format!("missing header field `{key}`")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, CircuitError> {
    s.parse().map_err(|_| perr(line, format!("bad number `{s}`")))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_circuit(text: &str) -> Result<LayeredCircuit, CircuitError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let fields = header_fields(hl, header, "circuit")?;
    let n: usize = num(field(&fields, "n", hl)?, hl)?;
    let depth: usize = num(field(&fields, "depth", hl)?, hl)?;
    let alphabet_bits: u32 = num(field(&fields, "alphabet_bits", hl)?, hl)?;
    let semiring: Semiring = field(&fields, "semiring", hl)?.parse().map_err(|e: String| perr(hl, e))?;
    let mut layers: Vec<Vec<Gate>> = vec![Vec::new(); depth + 1];
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 4 {
            return Err(perr(ln, "gate line needs layer, index, func and fan-in"));
        }
        let layer: usize = num(toks[0], ln)?;
        let index: usize = num(toks[1], ln)?;
        let fan_in: usize = num(toks[3], ln)?;
        if layer > depth {
            return Err(perr(ln, format!("layer {layer} beyond depth {depth}")));
        }
        if index != layers[layer].len() {
            return Err(perr(ln, format!("expected gate index {}, got {index}", layers[layer].len())));
        }
        if toks.len() != 4 + fan_in {
            return Err(perr(ln, format!("fan-in {fan_in} but {} wires", toks.len() - 4)));
        }
        let func = match toks[2] {
            "identity" => GateFn::Identity,
            "copy" => GateFn::Copy,
            "sum" => GateFn::Sum,
            "sop" => GateFn::SumOfProducts,
            "opaque" => return Err(perr(ln, "opaque gates cannot be parsed")),
            f => match f.strip_prefix("lin:") {
                Some(cs) => GateFn::LinearCombination(cs.split(',').map(|c| num(c, ln)).collect::<Result<_, _>>()?),
                None => return Err(perr(ln, format!("unknown gate function `{f}`"))),
            },
        };
        let inputs = toks[4..]
            .iter()
            .map(|w| {
                let (a, b) = w.split_once(':').ok_or_else(|| perr(ln, format!("bad wire `{w}`")))?;
                Ok(WireRef { layer: num(a, ln)?, index: num(b, ln)? })
            })
            .collect::<Result<_, CircuitError>>()?;
        layers[layer].push(Gate { func, inputs });
    }
    Ok(LayeredCircuit { n, alphabet_bits, semiring, layers })
}

fn gate_list(out: &mut String, gates: impl Iterator<Item = Option<u32>>) {
    for g in gates {
        match g {
            Some(g) => {
                let _ = write!(out, " {g}");
            }
            None => out.push_str(" -"),
        }
    }
    out.push('\n');
}

pub fn write_scheme(scheme: &PartitionScheme) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scheme n={} group_size={} layers={}", scheme.n, scheme.group_size, scheme.layers.len());
    for (l, lp) in scheme.layers.iter().enumerate() {
        for (w, part) in lp.parts.iter().enumerate() {
            let _ = write!(out, "part {l} {w}");
            gate_list(&mut out, part.iter().copied().map(Some));
        }
        for (w, pieces) in lp.pieces.iter().enumerate() {
            for (j, piece) in pieces.iter().enumerate() {
                let _ = write!(out, "piece {l} {w} {j}");
                gate_list(&mut out, piece.iter().copied());
            }
        }
    }
    out
}

pub fn parse_scheme(text: &str) -> Result<PartitionScheme, CircuitError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let fields = header_fields(hl, header, "scheme")?;
    let n: usize = num(field(&fields, "n", hl)?, hl)?;
    let group_size: usize = num(field(&fields, "group_size", hl)?, hl)?;
    let count: usize = num(field(&fields, "layers", hl)?, hl)?;
    let mut layers = vec![LayerPartition { parts: vec![Vec::new(); n], pieces: vec![Vec::new(); n] }; count];
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (kind, rest) = toks.split_first().ok_or_else(|| perr(ln, "empty line"))?;
        let fixed = if *kind == "piece" { 3 } else { 2 };
        if rest.len() < fixed {
            return Err(perr(ln, "truncated line"));
        }
        let layer: usize = num(rest[0], ln)?;
        let w: usize = num(rest[1], ln)?;
        if layer >= count || w >= n {
            return Err(perr(ln, format!("layer {layer} / node {w} out of range")));
        }
        let lp = &mut layers[layer];
        match *kind {
            "part" => {
                lp.parts[w] = rest[2..].iter().map(|g| num(g, ln)).collect::<Result<_, _>>()?;
            }
            "piece" => {
                let j: usize = num(rest[2], ln)?;
                if j != lp.pieces[w].len() {
                    return Err(perr(ln, format!("expected piece {}, got {j}", lp.pieces[w].len())));
                }
                let slots = rest[3..]
                    .iter()
                    .map(|g| if *g == "-" { Ok(None) } else { num(g, ln).map(Some) })
                    .collect::<Result<_, _>>()?;
                lp.pieces[w].push(slots);
            }
            other => return Err(perr(ln, format!("unknown record `{other}`"))),
        }
    }
    Ok(PartitionScheme { n, group_size, layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (LayeredCircuit, PartitionScheme) {
        let s = Semiring::plus_times(8);
        let c = LayeredCircuit {
            n: 2,
            alphabet_bits: 8,
            semiring: s,
            layers: vec![
                vec![Gate::input(); 4],
                vec![
                    Gate::new(GateFn::SumOfProducts, 0, [0, 1, 2, 3]),
                    Gate::new(GateFn::LinearCombination(vec![3, 250]), 0, [0, 3]),
                    Gate::new(GateFn::Sum, 0, [1, 2]),
                ],
            ],
        };
        let sch = PartitionScheme::from_parts(2, 2, vec![vec![vec![0, 1], vec![2, 3]], vec![vec![0, 1], vec![2]]]);
        (c, sch)
    }

    #[test]
    fn circuit_roundtrip() {
        let (c, _) = sample();
        let text = write_circuit(&c);
        assert!(text.starts_with("circuit n=2 depth=1 alphabet_bits=8 semiring=plus-times:251\n"));
        let back = parse_circuit(&text).unwrap();
        assert_eq!(write_circuit(&back), text);
        let x = [1, 2, 3, 4];
        assert_eq!(crate::circuit::evaluate(&back, &x).unwrap(), crate::circuit::evaluate(&c, &x).unwrap());
    }

    #[test]
    fn scheme_roundtrip() {
        let (_, s) = sample();
        let text = write_scheme(&s);
        assert!(text.contains("piece 1 1 0 2 -\n"));
        assert_eq!(parse_scheme(&text).unwrap(), s);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_circuit("").is_err());
        assert!(parse_circuit("circuit n=1 depth=0 alphabet_bits=4 semiring=wrapping:4\n0 0 frob 0\n").is_err());
        assert!(parse_circuit("circuit n=1 depth=0 alphabet_bits=4 semiring=wrapping:4\n0 1 identity 0\n").is_err());
        assert!(parse_circuit("circuit n=1 depth=1 alphabet_bits=4 semiring=wrapping:4\n0 0 identity 0\n1 0 copy 2 0:0\n").is_err());
    }
}
