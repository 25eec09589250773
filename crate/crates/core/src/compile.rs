//! Compiling deterministic clique algorithms into layered circuits.
//!
//! A `T`-round algorithm becomes a circuit of depth `2T + 1` partitioned by
//! node. Part `i` of each layer holds node `i`'s gates:
//!
//! * layer 0: the node's `n` inputs;
//! * layer `2r + 1` (`r < T`): `n` outbox gates (message to node `j` at slot `j`)
//!   followed by copies of the whole part below, `(r + 2) * n` gates;
//! * layer `2r + 2`: `n` inbox gates (message from node `j` at slot `j`)
//!   followed by copies of the storage slots `[n, (r + 2) * n)` of the layer
//!   below, `(r + 2) * n` gates;
//! * layer `2T + 1`: the node's outputs.
//!
//! An even layer therefore lists received blocks newest first, with the
//! inputs last. Outbox and output gates read the part below in chronological
//! order: inputs, then the inbox of each round in turn.

use crate::circuit::{Gate, GateFn, LayeredCircuit, PartitionScheme, Semiring};
use std::sync::Arc;
use thiserror::Error;

/// What a node knows about its surroundings while running an algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeContext {
    pub n: usize,
    pub node: usize,
    /// Message width in bits; every value is below `2^bits`.
    pub bits: u32,
}

impl NodeContext {
    pub fn mask(&self) -> u64 {
        (1u64 << self.bits) - 1
    }
}

/// A deterministic synchronous algorithm on `n` nodes with `n` input
/// symbols per node.
///
/// `state` is always the node's inputs followed by the inbox of every
/// completed round, oldest first; slot `j` of an inbox holds node `j`'s message.
pub trait CliqueAlgorithm: Send + Sync {
    fn name(&self) -> &str;
    fn rounds(&self) -> usize;
    fn output_size(&self, n: usize) -> usize;
    /// The `n` messages node `ctx.node` sends in round `round`, indexed by receiver.
    fn messages(&self, ctx: &NodeContext, round: usize, state: &[u64]) -> Vec<u64>;
    fn output(&self, ctx: &NodeContext, state: &[u64]) -> Vec<u64>;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} has {actual} inputs, expected {expected}")]
    InputShape { node: usize, expected: usize, actual: usize },
    #[error("node {node} round {round}: produced {actual} messages for {expected} nodes")]
    MessageCount { node: usize, round: usize, expected: usize, actual: usize },
    #[error("node {node} round {round}: message {value} to {dst} exceeds {bits} bits")]
    Oversize { node: usize, round: usize, dst: usize, value: u64, bits: u32 },
    #[error("input {value} at node {node} exceeds {bits} bits")]
    InputOversize { node: usize, value: u64, bits: u32 },
}

/// Runs the algorithm round by round without faults.
pub fn run_clique_directly(
    alg: &dyn CliqueAlgorithm,
    bits: u32,
    inputs: &[Vec<u64>],
) -> Result<Vec<Vec<u64>>, CompileError> {
    let n = inputs.len();
    let limit = 1u64 << bits;
    let mut states = Vec::with_capacity(n);
    for (node, inp) in inputs.iter().enumerate() {
        if inp.len() != n {
            return Err(CompileError::InputShape { node, expected: n, actual: inp.len() });
        }
        if let Some(&value) = inp.iter().find(|&&v| v >= limit) {
            return Err(CompileError::InputOversize { node, value, bits });
        }
        states.push(inp.clone());
    }
    for round in 0..alg.rounds() {
        let mut inboxes = vec![vec![0u64; n]; n];
        for (node, state) in states.iter().enumerate() {
            let ctx = NodeContext { n, node, bits };
            let msgs = alg.messages(&ctx, round, state);
            if msgs.len() != n {
                return Err(CompileError::MessageCount { node, round, expected: n, actual: msgs.len() });
            }
            for (dst, &value) in msgs.iter().enumerate() {
                if value >= limit {
                    return Err(CompileError::Oversize { node, round, dst, value, bits });
                }
                inboxes[dst][node] = value;
            }
        }
        for (state, inbox) in states.iter_mut().zip(inboxes) {
            state.extend(inbox);
        }
    }
    Ok(states
        .iter()
        .enumerate()
        .map(|(node, s)| alg.output(&NodeContext { n, node, bits }, s))
        .collect())
}

/// Positions of an even layer's part in chronological order.
fn chronological(rounds_done: usize, n: usize) -> Vec<usize> {
    (0..=rounds_done).rev().flat_map(|block| block * n..(block + 1) * n).collect()
}

/// Builds the layered circuit and its node partition for `alg` on `n` nodes.
///
/// Circuit inputs are the node inputs concatenated in node order; outputs
/// likewise.
pub fn compile_clique(
    alg: Arc<dyn CliqueAlgorithm>,
    n: usize,
    bits: u32,
) -> Result<(LayeredCircuit, PartitionScheme), CompileError> {
    if n < 2 {
        return Err(CompileError::TooFewNodes(n));
    }
    let rounds = alg.rounds();
    let out_size = alg.output_size(n);
    let mut layers: Vec<Vec<Gate>> = vec![vec![Gate::input(); n * n]];
    let mut sizes = vec![n];
    for r in 0..rounds {
        let below = sizes[sizes.len() - 1];
        let layer = layers.len();
        let odd = (r + 2) * n;
        let order = chronological(r, n);
        let mut gates = Vec::with_capacity(n * odd);
        for node in 0..n {
            let base = node * below;
            for dst in 0..n {
                let alg = Arc::clone(&alg);
                let ctx = NodeContext { n, node, bits };
                let f = move |state: &[u64]| alg.messages(&ctx, r, state)[dst];
                gates.push(Gate::new(GateFn::Opaque(Arc::new(f)), layer - 1, order.iter().map(|&k| base + k)));
            }
            gates.extend((0..below).map(|k| Gate::copy(layer - 1, base + k)));
        }
        layers.push(gates);
        sizes.push(odd);

        let even = odd;
        let mut gates = Vec::with_capacity(n * even);
        for node in 0..n {
            gates.extend((0..n).map(|src| Gate::copy(layer, src * odd + node)));
            gates.extend((n..odd).map(|k| Gate::copy(layer, node * odd + k)));
        }
        layers.push(gates);
        sizes.push(even);
    }
    let below = sizes[sizes.len() - 1];
    let order = chronological(rounds, n);
    let layer = layers.len();
    let mut outputs = Vec::with_capacity(n * out_size);
    for node in 0..n {
        for slot in 0..out_size {
            let alg = Arc::clone(&alg);
            let ctx = NodeContext { n, node, bits };
            let f = move |state: &[u64]| alg.output(&ctx, state)[slot];
            outputs.push(Gate::new(GateFn::Opaque(Arc::new(f)), layer - 1, order.iter().map(|&k| node * below + k)));
        }
    }
    layers.push(outputs);
    sizes.push(out_size);

    let parts = sizes
        .iter()
        .map(|&size| (0..n).map(|w| (w * size..(w + 1) * size).map(|g| g as u32).collect()).collect())
        .collect();
    let circuit = LayeredCircuit { n, alphabet_bits: bits, semiring: Semiring::wrapping(bits), layers };
    Ok((circuit, PartitionScheme::from_parts(n, n, parts)))
}

/// Every node sends input `j` to node `j`, then outputs what it received.
#[derive(Clone, Copy, Debug, Default)]
pub struct Echo;

impl CliqueAlgorithm for Echo {
    fn name(&self) -> &str {
        "echo"
    }
    fn rounds(&self) -> usize {
        1
    }
    fn output_size(&self, n: usize) -> usize {
        n
    }
    fn messages(&self, ctx: &NodeContext, _round: usize, state: &[u64]) -> Vec<u64> {
        state[..ctx.n].to_vec()
    }
    fn output(&self, ctx: &NodeContext, state: &[u64]) -> Vec<u64> {
        state[ctx.n..2 * ctx.n].to_vec()
    }
}

/// Node 0 gathers every node's input sum, then broadcasts the total.
#[derive(Clone, Copy, Debug, Default)]
pub struct SumBroadcast;

impl CliqueAlgorithm for SumBroadcast {
    fn name(&self) -> &str {
        "sum-broadcast"
    }
    fn rounds(&self) -> usize {
        2
    }
    fn output_size(&self, _n: usize) -> usize {
        1
    }
    fn messages(&self, ctx: &NodeContext, round: usize, state: &[u64]) -> Vec<u64> {
        let n = ctx.n;
        let sum = |xs: &[u64]| xs.iter().fold(0u64, |a, &x| a.wrapping_add(x)) & ctx.mask();
        let mut out = vec![0; n];
        match round {
            0 => out[0] = sum(&state[..n]),
            _ => {
                if ctx.node == 0 {
                    out.fill(sum(&state[n..2 * n]));
                }
            }
        }
        out
    }
    fn output(&self, ctx: &NodeContext, state: &[u64]) -> Vec<u64> {
        vec![state[2 * ctx.n]]
    }
}

/// Transposes the input matrix, shares column sums, then shares running
/// prefixes of those sums. Node outputs are all `n` prefixes.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrefixSum;

impl CliqueAlgorithm for PrefixSum {
    fn name(&self) -> &str {
        "prefix-sum"
    }
    fn rounds(&self) -> usize {
        3
    }
    fn output_size(&self, n: usize) -> usize {
        n
    }
    fn messages(&self, ctx: &NodeContext, round: usize, state: &[u64]) -> Vec<u64> {
        let n = ctx.n;
        let sum = |xs: &[u64]| xs.iter().fold(0u64, |a, &x| a.wrapping_add(x)) & ctx.mask();
        match round {
            0 => state[..n].to_vec(),
            1 => vec![sum(&state[n..2 * n]); n],
            _ => vec![sum(&state[2 * n..2 * n + ctx.node + 1]); n],
        }
    }
    fn output(&self, ctx: &NodeContext, state: &[u64]) -> Vec<u64> {
        state[3 * ctx.n..4 * ctx.n].to_vec()
    }
}

/// Sample algorithm by name: `echo`, `sum-broadcast` or `prefix-sum`.
pub fn sample_algorithm(name: &str) -> Option<Arc<dyn CliqueAlgorithm>> {
    match name {
        "echo" => Some(Arc::new(Echo)),
        "sum-broadcast" => Some(Arc::new(SumBroadcast)),
        "prefix-sum" => Some(Arc::new(PrefixSum)),
        _ => None,
    }
}

pub const SAMPLE_ALGORITHMS: [&str; 3] = ["echo", "sum-broadcast", "prefix-sum"];
