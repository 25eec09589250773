use crate::config::{AdversarySpec, RunConfig};
use crate::record::RunRecord;
use crate::run::execute;
use rayon::prelude::*;

/// Cartesian grid of runs over one base configuration.
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub base: RunConfig,
    pub ns: Vec<usize>,
    pub cs: Vec<usize>,
    pub chis: Vec<f64>,
    pub adversaries: Vec<AdversarySpec>,
    /// Seeds `base.seed .. base.seed + seeds`.
    pub seeds: u64,
}

impl SweepGrid {
    /// Grid points in row order: n, c, chi, adversary, seed.
    pub fn configs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &c in &self.cs {
                for &chi in &self.chis {
                    for adversary in &self.adversaries {
                        for s in 0..self.seeds {
                            out.push(RunConfig {
                                n,
                                c,
                                chi,
                                adversary: adversary.clone(),
                                seed: self.base.seed + s,
                                ..self.base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

fn failed_row(config: &RunConfig) -> RunRecord {
    RunRecord {
        n: config.n,
        c: config.c,
        chi: config.chi,
        workload: config.workload.clone(),
        adversary: config.adversary.to_string(),
        seed: config.seed,
        quiet_rounds: 0,
        protocol_rounds: 0,
        decode_rounds: 0,
        attempts_total: 0,
        max_attempts_per_epoch: 0,
        correct: false,
        wall_ms: 0,
    }
}

/// Runs every grid point in parallel. Rows come back in grid order; a
/// failed run yields a flagged row instead of aborting the sweep. With
/// `timing` off, `wall_ms` is written as 0 so reruns are byte-identical.
pub fn sweep(grid: &SweepGrid, timing: bool) -> Vec<(RunRecord, Option<String>)> {
    grid.configs()
        .par_iter()
        .map(|config| match execute(config) {
            Ok(outcome) => {
                let mut record = outcome.record;
                if !timing {
                    record.wall_ms = 0;
                }
                (record, None)
            }
            Err(e) => (failed_row(config), Some(e.to_string())),
        })
        .collect()
}

/// Parses `8,27,64`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("cannot parse {s:?} in list {text:?}")))
        .collect()
}
