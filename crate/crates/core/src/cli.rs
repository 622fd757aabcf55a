//! The `iecs` command line: closed-form tables (`analyze`) and seeded
//! experiments from a run file or a figure preset (`simulate`).
//!
//! Exit status is 0 on success, 2 for a bad run file or arguments, 3 when
//! the segment count cannot be scheduled, and 1 for anything else.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use crate::coding::synthetic_content;
use crate::config::{figure_preset, AnalyticTable, Preset, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    admissible_curve, delay_table, redundancy_convergence, success_curve, sweep, write_admissible_csv,
    write_convergence_csv, write_delay_csv, write_slot_csv, write_success_csv, write_summary_csv, RunReport, RunSpec,
};

#[derive(Debug, Parser)]
#[command(name = "iecs", version, about = "Harmonic-broadcast nVoD simulator with XOR subchannel coding")]
pub struct Cli {
    /// Worker threads for simulations (default: all cores).
    #[arg(long, global = true, env = "IECS_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print closed-form tables as CSV.
    Analyze(AnalyzeArgs),
    /// Run a simulation from a run file or a figure preset.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("table").required(true).args(["delay", "admissible", "success", "convergence"])))]
pub struct AnalyzeArgs {
    /// Startup delay and first-slot protection for R = 0..=max-r.
    #[arg(long)]
    pub delay: bool,
    /// Admissible loss against client slot for (M, R).
    #[arg(long)]
    pub admissible: bool,
    /// First-slot success probability against λ for (M, R) and each p_e.
    #[arg(long)]
    pub success: bool,
    /// Admissible loss of I plain channels against I − R content plus R redundancy.
    #[arg(long)]
    pub convergence: bool,

    /// Content duration in seconds.
    #[arg(long, default_value_t = 7200.0)]
    pub duration: f64,
    /// Total channels I.
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    /// Largest R in the delay table.
    #[arg(long = "max-r", default_value_t = 2)]
    pub max_r: usize,
    /// Content channels.
    #[arg(long = "M", default_value_t = 7)]
    pub m: usize,
    /// Redundancy channels.
    #[arg(long = "R", default_value_t = 1)]
    pub r: usize,
    /// Packet loss probabilities, comma separated.
    #[arg(long = "pe", value_delimiter = ',', default_value = "0.1")]
    pub pe: Vec<f64>,
    /// Largest λ in the success table.
    #[arg(long = "lambda-max", default_value_t = 64)]
    pub lambda_max: usize,
    /// Write the table into this directory instead of stdout.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "figure"])))]
pub struct SimulateArgs {
    /// Run file (flat key = value text).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Figure preset: 3, 4, 5, 6, 9, 10 or 11.
    #[arg(long, value_name = "N")]
    pub figure: Option<u32>,
    /// Override the master seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "results")]
    pub out: PathBuf,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) => 2,
        Error::ScheduleInfeasible { .. } => 3,
        _ => 1,
    }
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = match cli.threads {
        Some(0) => return Err(Error::InvalidArgument("IECS_THREADS must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    })
}

fn table_name(args: &AnalyzeArgs) -> String {
    if args.delay {
        format!("delay_I{}", args.channels)
    } else if args.admissible {
        format!("admissible_M{}_R{}", args.m, args.r)
    } else if args.success {
        format!("success_M{}_R{}", args.m, args.r)
    } else {
        format!("convergence_I{}_R{}", args.channels, args.r)
    }
}

fn write_table<W: Write>(out: W, table: &AnalyticTable) -> Result<()> {
    match table {
        AnalyticTable::Admissible(pairs) => {
            let curves = pairs.iter().map(|&(m, r)| Ok((m, r, admissible_curve(m, r)?))).collect::<Result<Vec<_>>>()?;
            write_admissible_csv(out, &curves)
        }
        &AnalyticTable::Convergence { channels, r } => {
            write_convergence_csv(out, channels, r, &redundancy_convergence(channels, r)?)
        }
        &AnalyticTable::Delay { duration, channels, max_r } => {
            write_delay_csv(out, channels, duration, &delay_table(duration, channels, max_r)?)
        }
        AnalyticTable::Success { m, r, losses, lambda_max } => {
            write_success_csv(out, *m, *r, &success_curve(*m, *r, losses, *lambda_max)?)
        }
    }
}

fn table_file(name: &str, table: &AnalyticTable) -> String {
    match table {
        AnalyticTable::Admissible(_) => format!("{name}_admissible.csv"),
        AnalyticTable::Convergence { .. } => format!("{name}_convergence.csv"),
        AnalyticTable::Delay { .. } => format!("{name}_delay.csv"),
        AnalyticTable::Success { .. } => format!("{name}_success.csv"),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let table = if args.delay {
        AnalyticTable::Delay { duration: args.duration, channels: args.channels, max_r: args.max_r }
    } else if args.admissible {
        AnalyticTable::Admissible(vec![(args.m, args.r)])
    } else if args.success {
        AnalyticTable::Success { m: args.m, r: args.r, losses: args.pe.clone(), lambda_max: args.lambda_max }
    } else {
        AnalyticTable::Convergence { channels: args.channels, r: args.r }
    };
    match &args.out {
        None => write_table(io::stdout().lock(), &table),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(format!("{}.csv", table_name(args)));
            write_table(BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?), &table)
        }
    }
}

#[derive(Debug, Serialize)]
struct RunEntry<'a> {
    spec: &'a RunSpec,
    content_bytes: usize,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    name: &'a str,
    version: &'a str,
    figure: Option<u32>,
    /// Run file that reproduces the simulation bit for bit.
    run_file: Option<String>,
    tables: Vec<String>,
    runs: Vec<RunEntry<'a>>,
    files: Vec<String>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let preset = match (&args.config, args.figure) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            let mut cfg = RunConfig::parse(&text)?;
            if let Some(seed) = args.seed {
                cfg.system.seed = seed;
            }
            Preset::Simulation(cfg)
        }
        (None, Some(figure)) => figure_preset(figure, args.seed.unwrap_or(1))?,
        (None, None) => return Err(Error::InvalidArgument("give --config or --figure".into())),
    };
    let dir = &args.out;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    match preset {
        Preset::Analytic { name, tables } => {
            let mut files = Vec::new();
            for table in &tables {
                let file = table_file(&name, table);
                write_table(create(dir, &file)?, table)?;
                files.push(file);
            }
            let manifest = Manifest {
                name: &name,
                version: env!("CARGO_PKG_VERSION"),
                figure: args.figure,
                run_file: None,
                tables: tables.iter().map(|t| format!("{t:?}")).collect(),
                runs: Vec::new(),
                files,
            };
            write_manifest(dir, &manifest)
        }
        Preset::Simulation(cfg) => {
            let grid = cfg.grid()?;
            let results = sweep(&grid);
            let reports: Vec<RunReport> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
            let slots = format!("{}_slots.csv", cfg.name);
            let summary = format!("{}_summary.csv", cfg.name);
            write_slot_csv(create(dir, &slots)?, &reports)?;
            write_summary_csv(create(dir, &summary)?, &reports)?;
            let run_file = cfg.to_text();
            fs::write(dir.join("run.cfg"), &run_file).map_err(|e| io_err(dir, e))?;
            let manifest = Manifest {
                name: &cfg.name,
                version: env!("CARGO_PKG_VERSION"),
                figure: args.figure,
                run_file: Some(run_file),
                tables: Vec::new(),
                runs: grid
                    .iter()
                    .zip(&results)
                    .map(|(spec, result)| RunEntry {
                        spec,
                        content_bytes: synthetic_content(&spec.config).len(),
                        error: result.as_ref().err().map(Error::to_string),
                    })
                    .collect(),
                files: vec![slots, summary, "run.cfg".into()],
            };
            write_manifest(dir, &manifest)?;
            match results.into_iter().find_map(|r| r.err()) {
                Some(err) => Err(err),
                None => Ok(()),
            }
        }
    }
}

fn write_manifest(dir: &Path, manifest: &Manifest<'_>) -> Result<()> {
    let mut out = create(dir, "manifest.json")?;
    serde_json::to_writer_pretty(&mut out, manifest).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| io_err(&dir.join("manifest.json"), e))
}
