use crate::config::RunConfig;
use crate::record::RunRecord;
use crate::workload::prepare;
use faulty_clique::protocol::FaultyReport;
use faulty_clique::{run_faulty, run_faulty_sublinear, Engine, EngineError, ProtocolError, RunOptions, SimConfig};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("adversary broke the fault model: {0}")]
    ModelViolation(String),
    #[error("simulation failed: {0}")]
    Protocol(ProtocolError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::ModelViolation(_) => 3,
            Self::Protocol(_) => 4,
        }
    }
}

impl From<ProtocolError> for RunError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Engine(EngineError::InvalidConfig(m)) => Self::Config(m),
            ProtocolError::Incompatible(m) => Self::Config(m),
            ProtocolError::Engine(v @ EngineError::ModelViolation { .. }) => Self::ModelViolation(v.to_string()),
            other => Self::Protocol(other),
        }
    }
}

pub struct RunOutcome {
    pub record: RunRecord,
    pub report: FaultyReport,
    /// Whether the decoded outputs match the workload's independent oracle.
    pub oracle_match: bool,
}

pub fn sim_config(config: &RunConfig) -> SimConfig {
    SimConfig::new(config.n, config.c)
        .with_chi(config.chi)
        .with_seed(config.seed)
        .with_route_cost(config.route_cost)
        .with_b(config.b)
}

/// One faulty run: the sublinear runner when `chi < 1`.
pub fn execute(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let sim = sim_config(config);
    sim.validate().map_err(|e| RunError::Config(e.to_string()))?;
    let group = sim.group_size().map_err(|e| RunError::Config(e.to_string()))?;
    let prepared = prepare(&config.workload, config.n, config.chi, group, config.b, config.seed).map_err(RunError::Config)?;
    let adversary = config.adversary.build(config.seed).map_err(RunError::Config)?;
    let started = Instant::now();
    let mut engine = Engine::new(sim, adversary).map_err(|e| RunError::Config(e.to_string()))?;
    let opts = RunOptions { pipeline_collect: config.pipeline_collect };
    let report = if group < config.n {
        run_faulty_sublinear(&prepared.workload, &mut engine, opts)?
    } else {
        run_faulty(&prepared.workload, &mut engine, opts)?
    };
    let wall_ms = started.elapsed().as_millis() as u64;
    let oracle_match = report.outputs == prepared.oracle;
    let ledger = &report.ledger;
    let record = RunRecord {
        n: config.n,
        c: config.c,
        chi: config.chi,
        workload: config.workload.clone(),
        adversary: config.adversary.to_string(),
        seed: config.seed,
        quiet_rounds: ledger.quiet_rounds,
        protocol_rounds: ledger.protocol_rounds,
        decode_rounds: ledger.decode_rounds,
        attempts_total: ledger.attempts_total(),
        max_attempts_per_epoch: ledger.max_attempts_per_epoch(),
        correct: oracle_match && report.correct && report.collectors_correct,
        wall_ms,
    };
    Ok(RunOutcome { record, report, oracle_match })
}

/// Round counts and attempts recomputed from trace lines alone:
/// `(quiet, protocol, decode, attempts per epoch)`.
pub fn counts_from_trace(trace: &str) -> (usize, usize, usize, Vec<usize>) {
    let (mut quiet, mut protocol, mut decode) = (0, 0, 0);
    let mut attempts: Vec<usize> = Vec::new();
    for line in trace.lines() {
        let mut words = line.split_whitespace();
        let label = words.by_ref().skip_while(|&w| w != "phase").nth(1).unwrap_or("");
        if label.starts_with("quiet:") {
            quiet += 1;
        } else if label == "decode" {
            decode += 1;
        } else {
            protocol += 1;
        }
        let mut parts = label.split(':');
        if let (Some("epoch"), Some(e), Some("attempt"), Some(a)) = (parts.next(), parts.next(), parts.next(), parts.next()) {
            if let (Ok(e), Ok(a)) = (e.parse::<usize>(), a.parse::<usize>()) {
                if attempts.len() <= e {
                    attempts.resize(e + 1, 0);
                }
                attempts[e] = attempts[e].max(a);
            }
        }
    }
    (quiet, protocol, decode, attempts)
}
