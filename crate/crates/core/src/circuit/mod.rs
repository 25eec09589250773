//! Layered circuits: the gate IR, a reference evaluator, partition schemes and
//! their locality analysis, and a line-oriented text format.

mod partition;
mod semiring;
mod text;

pub use partition::{
    analyze_partition, classify_layers, EpochPlan, LayerKind, LocalityReport, PartitionScheme,
    TransitionLocality,
};
pub use semiring::{is_prime, Semiring};
pub use text::{parse_circuit, parse_scheme, write_circuit, write_scheme};

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Pure callback computing a gate's value from its in-wire values.
pub type OpaqueFn = Arc<dyn Fn(&[u64]) -> u64 + Send + Sync>;

/// What a gate computes from its ordered in-wire values.
#[derive(Clone)]
pub enum GateFn {
    /// Input gate; only valid on layer 0.
    Identity,
    Copy,
    /// Semiring sum of all inputs.
    Sum,
    /// `x0*x1 + x2*x3 + ...` over the semiring; even fan-in.
    SumOfProducts,
    /// `sum_k coeffs[k] * x_k`; coefficients are semiring elements.
    LinearCombination(Vec<u64>),
    Opaque(OpaqueFn),
}

impl GateFn {
    pub fn name(&self) -> &'static str {
        match self {
            GateFn::Identity => "identity",
            GateFn::Copy => "copy",
            GateFn::Sum => "sum",
            GateFn::SumOfProducts => "sop",
            GateFn::LinearCombination(_) => "lin",
            GateFn::Opaque(_) => "opaque",
        }
    }

    fn arity_ok(&self, fan_in: usize) -> bool {
        match self {
            GateFn::Identity => fan_in == 0,
            GateFn::Copy => fan_in == 1,
            GateFn::Sum => fan_in >= 1,
            GateFn::SumOfProducts => fan_in >= 2 && fan_in % 2 == 0,
            GateFn::LinearCombination(c) => fan_in == c.len() && fan_in >= 1,
            GateFn::Opaque(_) => true,
        }
    }

    /// Applies the function to already-gathered input values.
    pub fn apply(&self, semiring: Semiring, inputs: &[u64]) -> u64 {
        match self {
            GateFn::Identity => unreachable!("identity gates take no in-wires"),
            GateFn::Copy => inputs[0],
            GateFn::Sum => inputs[1..].iter().fold(inputs[0], |acc, &x| semiring.add(acc, x)),
            GateFn::SumOfProducts => inputs
                .chunks_exact(2)
                .fold(semiring.zero(), |acc, p| semiring.add(acc, semiring.mul(p[0], p[1]))),
            GateFn::LinearCombination(coeffs) => coeffs
                .iter()
                .zip(inputs)
                .fold(semiring.zero(), |acc, (&a, &x)| semiring.add(acc, semiring.mul(a, x))),
            GateFn::Opaque(f) => f(inputs),
        }
    }
}

impl fmt::Debug for GateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateFn::LinearCombination(c) => write!(f, "lin{c:?}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Reference to gate `index` of layer `layer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireRef {
    pub layer: u32,
    pub index: u32,
}

impl WireRef {
    pub fn new(layer: usize, index: usize) -> Self {
        Self { layer: layer as u32, index: index as u32 }
    }
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub func: GateFn,
    pub inputs: Vec<WireRef>,
}

impl Gate {
    pub fn input() -> Self {
        Self { func: GateFn::Identity, inputs: Vec::new() }
    }

    pub fn copy(layer: usize, index: usize) -> Self {
        Self { func: GateFn::Copy, inputs: vec![WireRef::new(layer, index)] }
    }

    pub fn new(func: GateFn, prev_layer: usize, inputs: impl IntoIterator<Item = usize>) -> Self {
        Self {
            func,
            inputs: inputs.into_iter().map(|i| WireRef::new(prev_layer, i)).collect(),
        }
    }
}

/// Layers `V_0 .. V_D` of gates; wires only run from layer `i` to `i + 1`.
#[derive(Clone, Debug)]
pub struct LayeredCircuit {
    /// Number of clique nodes the circuit is laid out for.
    pub n: usize,
    pub alphabet_bits: u32,
    pub semiring: Semiring,
    pub layers: Vec<Vec<Gate>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("expected {expected} inputs, got {actual}")]
    InputLength { expected: usize, actual: usize },
    #[error("input {index} = {value} is not an element of {semiring}")]
    InputOutOfRange { index: usize, value: u64, semiring: String },
    #[error("gate ({layer}, {index}): {func} cannot take {fan_in} inputs")]
    Arity { layer: usize, index: usize, func: &'static str, fan_in: usize },
    #[error("circuit is invalid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("scheme: {0}")]
    Scheme(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A structural defect found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoLayers,
    NonInputOnLayerZero { index: usize },
    InputAboveLayerZero { layer: usize, index: usize },
    NonConsecutiveWire { layer: usize, index: usize, from_layer: usize },
    DanglingWire { layer: usize, index: usize, target: usize },
    Arity { layer: usize, index: usize, func: &'static str, fan_in: usize },
    /// A non-output gate whose value is never read.
    Unused { layer: usize, index: usize },
    EmptyLayer { layer: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLayers => write!(f, "circuit has no layers"),
            Violation::NonInputOnLayerZero { index } => write!(f, "gate (0, {index}) is not an input gate"),
            Violation::InputAboveLayerZero { layer, index } => {
                write!(f, "input gate at ({layer}, {index})")
            }
            Violation::NonConsecutiveWire { layer, index, from_layer } => {
                write!(f, "non-consecutive wire into ({layer}, {index}) from layer {from_layer}")
            }
            Violation::DanglingWire { layer, index, target } => {
                write!(f, "wire into ({layer}, {index}) from missing gate {target}")
            }
            Violation::Arity { layer, index, func, fan_in } => {
                write!(f, "gate ({layer}, {index}): {func} with fan-in {fan_in}")
            }
            Violation::Unused { layer, index } => write!(f, "gate ({layer}, {index}) has no out-wires"),
            Violation::EmptyLayer { layer } => write!(f, "layer {layer} is empty"),
        }
    }
}

impl LayeredCircuit {
    pub fn depth(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    pub fn input_len(&self) -> usize {
        self.layers.first().map_or(0, Vec::len)
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, Vec::len)
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn wire_count(&self) -> usize {
        self.layers.iter().flatten().map(|g| g.inputs.len()).sum()
    }

    /// Value of a single gate given the full value vector of the layer below.
    pub fn eval_gate(&self, gate: &Gate, prev: &[u64]) -> u64 {
        let mut buf = Vec::with_capacity(gate.inputs.len());
        self.eval_gate_with(gate, |w| prev[w.index as usize], &mut buf)
    }

    /// Value of a single gate, reading inputs through `lookup`.
    pub fn eval_gate_with(
        &self,
        gate: &Gate,
        mut lookup: impl FnMut(WireRef) -> u64,
        buf: &mut Vec<u64>,
    ) -> u64 {
        buf.clear();
        buf.extend(gate.inputs.iter().map(|&w| lookup(w)));
        gate.func.apply(self.semiring, buf)
    }

    fn check_inputs(&self, inputs: &[u64]) -> Result<(), CircuitError> {
        if inputs.len() != self.input_len() {
            return Err(CircuitError::InputLength { expected: self.input_len(), actual: inputs.len() });
        }
        if let Some((index, &value)) = inputs.iter().enumerate().find(|(_, &v)| !self.semiring.contains(v)) {
            return Err(CircuitError::InputOutOfRange { index, value, semiring: self.semiring.to_string() });
        }
        for (l, layer) in self.layers.iter().enumerate().skip(1) {
            for (i, g) in layer.iter().enumerate() {
                if !g.func.arity_ok(g.inputs.len()) {
                    return Err(CircuitError::Arity { layer: l, index: i, func: g.func.name(), fan_in: g.inputs.len() });
                }
            }
        }
        Ok(())
    }
}

/// Checks the structural invariants; an empty list means the circuit is well formed.
pub fn validate(circuit: &LayeredCircuit) -> Vec<Violation> {
    let mut out = Vec::new();
    if circuit.layers.is_empty() {
        out.push(Violation::NoLayers);
        return out;
    }
    let mut used: Vec<Vec<bool>> = circuit.layers.iter().map(|l| vec![false; l.len()]).collect();
    for (l, layer) in circuit.layers.iter().enumerate() {
        if layer.is_empty() {
            out.push(Violation::EmptyLayer { layer: l });
        }
        for (i, gate) in layer.iter().enumerate() {
            let is_input = matches!(gate.func, GateFn::Identity);
            if l == 0 {
                if !is_input {
                    out.push(Violation::NonInputOnLayerZero { index: i });
                }
            } else if is_input {
                out.push(Violation::InputAboveLayerZero { layer: l, index: i });
            }
            if !gate.func.arity_ok(gate.inputs.len()) {
                out.push(Violation::Arity { layer: l, index: i, func: gate.func.name(), fan_in: gate.inputs.len() });
            }
            for w in &gate.inputs {
                let from = w.layer as usize;
                if l == 0 || from + 1 != l {
                    out.push(Violation::NonConsecutiveWire { layer: l, index: i, from_layer: from });
                } else if w.index as usize >= circuit.layers[from].len() {
                    out.push(Violation::DanglingWire { layer: l, index: i, target: w.index as usize });
                } else {
                    used[from][w.index as usize] = true;
                }
            }
        }
    }
    for (l, flags) in used.iter().enumerate().take(circuit.layers.len() - 1) {
        for (i, &u) in flags.iter().enumerate() {
            if !u {
                out.push(Violation::Unused { layer: l, index: i });
            }
        }
    }
    out
}

/// Values of every layer, bottom to top.
pub fn evaluate_layers(circuit: &LayeredCircuit, inputs: &[u64]) -> Result<Vec<Vec<u64>>, CircuitError> {
    circuit.check_inputs(inputs)?;
    let mut values = Vec::with_capacity(circuit.layers.len());
    values.push(inputs.to_vec());
    let mut buf = Vec::new();
    for layer in &circuit.layers[1..] {
        let prev = values.last().expect("layer 0 pushed");
        let next: Vec<u64> = layer
            .iter()
            .map(|g| circuit.eval_gate_with(g, |w| prev[w.index as usize], &mut buf))
            .collect();
        values.push(next);
    }
    Ok(values)
}

/// Forward evaluation; returns the values of the top layer in gate order.
pub fn evaluate(circuit: &LayeredCircuit, inputs: &[u64]) -> Result<Vec<u64>, CircuitError> {
    Ok(evaluate_layers(circuit, inputs)?.pop().unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LayeredCircuit {
        let s = Semiring::plus_times(8);
        LayeredCircuit {
            n: 2,
            alphabet_bits: 8,
            semiring: s,
            layers: vec![
                vec![Gate::input(), Gate::input(), Gate::input()],
                vec![
                    Gate::new(GateFn::Sum, 0, [0, 1, 2]),
                    Gate::new(GateFn::SumOfProducts, 0, [0, 1, 1, 2]),
                ],
                vec![Gate::new(GateFn::LinearCombination(vec![2, s.from_i64(-1).unwrap()]), 1, [0, 1])],
            ],
        }
    }

    #[test]
    fn identity_layer_is_valid_and_echoes() {
        let c = LayeredCircuit {
            n: 3,
            alphabet_bits: 4,
            semiring: Semiring::wrapping(4),
            layers: vec![vec![Gate::input(); 3]],
        };
        assert!(validate(&c).is_empty());
        assert_eq!(evaluate(&c, &[1, 2, 3]).unwrap(), vec![1, 2, 3]);
        assert_eq!(c.depth(), 0);
    }

    #[test]
    fn depth_one_copy_circuit_echoes() {
        let c = LayeredCircuit {
            n: 2,
            alphabet_bits: 4,
            semiring: Semiring::wrapping(4),
            layers: vec![vec![Gate::input(); 2], vec![Gate::copy(0, 0), Gate::copy(0, 1)]],
        };
        assert!(validate(&c).is_empty());
        assert_eq!(evaluate(&c, &[9, 4]).unwrap(), vec![9, 4]);
    }

    #[test]
    fn arithmetic_gates() {
        // sum = 3+4+5 = 12, sop = 3*4 + 4*5 = 32, out = 2*12 - 32 = -8 mod 251
        assert_eq!(evaluate(&tiny(), &[3, 4, 5]).unwrap(), vec![243]);
    }

    #[test]
    fn skipped_layer_wire_is_reported() {
        let mut c = tiny();
        c.layers[2][0].inputs[0] = WireRef::new(0, 0);
        let v = validate(&c);
        assert!(v.contains(&Violation::NonConsecutiveWire { layer: 2, index: 0, from_layer: 0 }));
        assert!(v.iter().any(|x| x.to_string().contains("non-consecutive wire")));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let mut c = tiny();
        c.layers[1][1].inputs.pop();
        assert!(matches!(evaluate(&c, &[1, 2, 3]), Err(CircuitError::Arity { .. })));
        assert!(!validate(&c).is_empty());
    }

    #[test]
    fn wrong_input_length_is_an_error() {
        assert!(matches!(evaluate(&tiny(), &[1]), Err(CircuitError::InputLength { .. })));
        assert!(matches!(evaluate(&tiny(), &[1, 2, 999]), Err(CircuitError::InputOutOfRange { .. })));
    }
}
