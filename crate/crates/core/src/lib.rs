//! Simulation of crash-fault-tolerant computation on a congested clique.

pub mod circuit;
pub mod compile;
pub mod engine;
pub mod galois;
pub mod matmul;
pub mod protocol;

pub use circuit::{evaluate, LayeredCircuit, PartitionScheme, Semiring};
pub use engine::{Adversary, Engine, EngineError, RoundLedger, SimConfig};
pub use matmul::{naive_mm, Matrix};
pub use protocol::{run_faulty, run_faulty_sublinear, run_nonfaulty, FaultyReport, ProtocolError, RunOptions, Workload};
