use clap::{Args, Parser, Subcommand};
use faulty_clique::circuit::{write_circuit, write_scheme};
use faulty_clique::protocol::plan_attempt;
use faulty_clique_cli::acceptance::run_all;
use faulty_clique_cli::config::{read_config_file, resolve, AdversarySpec};
use faulty_clique_cli::plot::plot;
use faulty_clique_cli::record::{read_csv, write_csv};
use faulty_clique_cli::run::{execute, sim_config, RunError};
use faulty_clique_cli::sweep::{parse_list, sweep, SweepGrid};
use faulty_clique_cli::workload::prepare;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "faulty-clique", version, about = "Crash-fault-tolerant congested clique simulator", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print its CSV record.
    Run(RunArgs),
    /// Run a grid of simulations.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Verify,
    /// Draw rounds-vs-n and attempt histogram figures from a CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "plots")]
        out_dir: PathBuf,
    },
    /// Write a workload's circuit and partition as text.
    ExportCircuit {
        #[arg(long, default_value = "semiring-mm:plus-times")]
        workload: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        chi: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// Flags shared by `run` and `sweep`; unset flags fall back to the config
/// file, then to defaults.
#[derive(Args, Default)]
struct CommonArgs {
    /// key = value file with defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workload: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    route_cost: Option<usize>,
    #[arg(long)]
    b: Option<u32>,
    #[arg(long)]
    pipeline_collect: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(v) = &self.workload {
            out.push(("workload", v.clone()));
        }
        if let Some(v) = self.seed {
            out.push(("seed", v.to_string()));
        }
        if let Some(v) = self.route_cost {
            out.push(("route-cost", v.to_string()));
        }
        if let Some(v) = self.b {
            out.push(("b", v.to_string()));
        }
        if self.pipeline_collect {
            out.push(("pipeline-collect", "true".into()));
        }
        out
    }

    fn file(&self) -> Result<BTreeMap<String, String>, String> {
        self.config.as_deref().map(read_config_file).transpose().map(Option::unwrap_or_default)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    chi: Option<f64>,
    /// none | random:<rate> | greedy | script:<path>
    #[arg(long)]
    adversary: Option<String>,
    /// Write the per-round trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "8,27,64")]
    n: String,
    #[arg(long, default_value = "2,3,4")]
    c: String,
    #[arg(long, default_value = "1")]
    chi: String,
    /// Comma-separated adversaries.
    #[arg(long, default_value = "random:0.05")]
    adversary: String,
    /// Seeds per grid point, counting up from --seed.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Write wall_ms as 0 so reruns produce identical files.
    #[arg(long)]
    no_wall_time: bool,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, String> {
    match path {
        Some(p) => File::create(p).map(|f| Box::new(f) as Box<dyn Write>).map_err(|e| format!("cannot create {}: {e}", p.display())),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let mut flags = args.common.flags();
    for (key, value) in [
        ("n", args.n.map(|v| v.to_string())),
        ("c", args.c.map(|v| v.to_string())),
        ("chi", args.chi.map(|v| v.to_string())),
        ("adversary", args.adversary.clone()),
    ] {
        if let Some(v) = value {
            flags.push((key, v));
        }
    }
    let config = match args.common.file().and_then(|file| resolve(&file, &flags)) {
        Ok(c) => c,
        Err(e) => return fail(2, format!("invalid configuration: {e}")),
    };
    let outcome = match execute(&config) {
        Ok(o) => o,
        Err(e) => return fail(e.exit_code() as u8, &e),
    };
    if let Some(path) = &args.trace {
        if let Err(e) = std::fs::write(path, outcome.report.ledger.trace_lines()) {
            return fail(1, format!("cannot write {}: {e}", path.display()));
        }
    }
    let correct = outcome.record.correct;
    let written = output(args.common.out.as_ref())
        .and_then(|out| write_csv(out, &[(outcome.record, None)], false).map_err(|e| e.to_string()));
    match written {
        Err(e) => fail(1, e),
        Ok(()) if !correct => fail(1, "decoded outputs disagree with the oracle"),
        Ok(()) => ExitCode::SUCCESS,
    }
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let grid = (|| -> Result<SweepGrid, String> {
        let base = resolve(&args.common.file()?, &args.common.flags())?;
        Ok(SweepGrid {
            base,
            ns: parse_list(&args.n)?,
            cs: parse_list(&args.c)?,
            chis: parse_list(&args.chi)?,
            adversaries: args.adversary.split(',').map(|s| s.trim().parse::<AdversarySpec>()).collect::<Result<_, _>>()?,
            seeds: args.seeds,
        })
    })();
    let grid = match grid {
        Ok(g) => g,
        Err(e) => return fail(2, format!("invalid configuration: {e}")),
    };
    let rows = sweep(&grid, !args.no_wall_time);
    let flagged = rows.iter().filter(|(_, e)| e.is_some()).count();
    if let Err(e) = output(args.common.out.as_ref()).and_then(|out| write_csv(out, &rows, true).map_err(|e| e.to_string())) {
        return fail(1, e);
    }
    if flagged > 0 {
        eprintln!("{flagged} of {} runs failed; see the error column", rows.len());
    }
    ExitCode::SUCCESS
}

fn cmd_verify() -> ExitCode {
    let results = run_all(plan_attempt);
    for c in &results {
        println!("{c}");
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_plot(csv: PathBuf, out_dir: PathBuf) -> ExitCode {
    let rows = File::open(&csv).map_err(|e| format!("cannot open {}: {e}", csv.display())).and_then(read_csv);
    match rows.and_then(|rows| plot(&rows, &out_dir)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, e),
    }
}

fn cmd_export(workload: String, n: usize, chi: f64, out_dir: PathBuf) -> ExitCode {
    let sim = sim_config(&faulty_clique_cli::config::RunConfig { n, chi, ..Default::default() });
    let group = match sim.group_size() {
        Ok(g) => g,
        Err(e) => return fail(2, RunError::Config(e.to_string())),
    };
    let prepared = match prepare(&workload, n, chi, group, sim.b, 0) {
        Ok(p) => p,
        Err(e) => return fail(2, RunError::Config(e)),
    };
    let stem = workload.replace(':', "-");
    let files = [
        (out_dir.join(format!("{stem}-n{n}.circuit")), write_circuit(&prepared.workload.circuit)),
        (out_dir.join(format!("{stem}-n{n}.scheme")), write_scheme(&prepared.workload.scheme)),
    ];
    for (path, text) in files {
        if let Err(e) = std::fs::create_dir_all(&out_dir).and_then(|()| std::fs::write(&path, text)) {
            return fail(1, format!("cannot write {}: {e}", path.display()));
        }
        println!("{}", path.display());
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify => cmd_verify(),
        Command::Plot { csv, out_dir } => cmd_plot(csv, out_dir),
        Command::ExportCircuit { workload, n, chi, out_dir } => cmd_export(workload, n, chi, out_dir),
    }
}
