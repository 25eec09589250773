//! Experiment harness for the faulty-clique simulator: single runs, sweeps,
//! plots and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod plot;
pub mod record;
pub mod run;
pub mod sweep;
pub mod workload;
