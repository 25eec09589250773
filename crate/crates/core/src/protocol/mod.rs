//! Running a partitioned layered circuit on the clique, with and without
//! crash faults.

mod attempt;
mod runner;

pub use attempt::{
    check_batch_shrink, plan_attempt, AttemptCase, AttemptGroup, AttemptState, Planner, ShrinkViolation,
};
pub use runner::{run_faulty, run_faulty_sublinear, run_nonfaulty, Checkpoint, PieceId};

use crate::circuit::{evaluate, CircuitError, LayeredCircuit, PartitionScheme};
use crate::compile::{compile_clique, CliqueAlgorithm, CompileError};
use crate::engine::EngineError;
use crate::galois::CodeError;
use crate::matmul::{MatmulCircuit, Matrix};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("workload does not fit the engine: {0}")]
    Incompatible(String),
    #[error("a failure occurred under the fault-free runner in round {round}")]
    UnexpectedFailure { round: usize },
    #[error("epoch {epoch} still has missing parts after {attempts} attempts")]
    NoProgress { epoch: usize, attempts: usize },
    #[error("protocol invariant broken: {0}")]
    Invariant(String),
}

/// A circuit, its partition, concrete inputs and where each input starts.
#[derive(Clone, Debug)]
pub struct Workload {
    pub name: String,
    pub circuit: LayeredCircuit,
    pub scheme: PartitionScheme,
    /// Layer-0 values.
    pub inputs: Vec<u64>,
    /// Node initially holding each layer-0 gate.
    pub holders: Vec<u32>,
}

impl Workload {
    /// Inputs start at their layer-0 owners.
    pub fn new(name: impl Into<String>, circuit: LayeredCircuit, scheme: PartitionScheme, inputs: Vec<u64>) -> Self {
        let holders = scheme.owners(0);
        Self { name: name.into(), circuit, scheme, inputs, holders }
    }

    /// Product `a * b`, row `r` of both factors starting at node `r`.
    pub fn matmul(name: impl Into<String>, mc: &MatmulCircuit, a: &Matrix, b: &Matrix) -> Self {
        Self {
            name: name.into(),
            circuit: mc.circuit.clone(),
            scheme: mc.scheme.clone(),
            inputs: mc.layout.circuit_inputs(a, b),
            holders: mc.layout.initial_holders(),
        }
    }

    /// A compiled clique algorithm; node `u` starts with `per_node[u]`.
    pub fn clique(
        name: impl Into<String>,
        alg: Arc<dyn CliqueAlgorithm>,
        bits: u32,
        per_node: &[Vec<u64>],
    ) -> Result<Self, CompileError> {
        let (circuit, scheme) = compile_clique(alg, per_node.len(), bits)?;
        let mut inputs = vec![0; circuit.input_len()];
        for (u, values) in per_node.iter().enumerate() {
            for (&g, &v) in scheme.part(0, u).iter().zip(values) {
                inputs[g as usize] = v;
            }
        }
        Ok(Self::new(name, circuit, scheme, inputs))
    }

    pub fn expected_outputs(&self) -> Result<Vec<u64>, CircuitError> {
        evaluate(&self.circuit, &self.inputs)
    }
}

/// Options that change scheduling but never results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Let a collector gather several codewords per window from disjoint
    /// holder sets, retrying whatever did not arrive.
    pub pipeline_collect: bool,
}

/// What happened in one attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptRecord {
    pub epoch: usize,
    pub attempt: usize,
    pub case: AttemptCase,
    pub alive_before: usize,
    pub missing_before: usize,
    pub missing_after: usize,
    pub crashes: usize,
}

/// Output part recovered by one collector in the decode phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectedOutput {
    pub collector: usize,
    pub target: usize,
    /// Values of the target's output part, in part order.
    pub values: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct FaultyReport {
    /// Output layer, decoded from the final checkpoints held by alive nodes.
    pub outputs: Vec<u64>,
    pub expected: Vec<u64>,
    pub correct: bool,
    /// Per alive collector at the end of the decode phase.
    pub collected: Vec<CollectedOutput>,
    pub collectors_correct: bool,
    pub attempts: Vec<AttemptRecord>,
    /// Smallest observed surplus of alive shard holders over `K`, across all
    /// complete checkpoints and all stage boundaries.
    pub min_shard_margin: usize,
    pub ledger: crate::engine::RoundLedger,
}

#[derive(Clone, Debug)]
pub struct NonfaultyReport {
    pub outputs: Vec<u64>,
    pub expected: Vec<u64>,
    pub correct: bool,
    pub ledger: crate::engine::RoundLedger,
}
