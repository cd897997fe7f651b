//! Command-line front end. The `coursepop` binary only parses arguments and
//! calls [`run`]; every subcommand goes through the same library code as the
//! HTTP service.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dsl::parse_curriculum_with_warnings;
use crate::formats::{
    read_assignment, read_intakes, read_records, write_assignment, write_loads, write_populations,
    write_records,
};
use crate::graph::{aggregate_graph, build_state_graph};
use crate::markov::{estimate_probabilities, EstimationConfig, PopulationVector};
use crate::montecarlo::{generate_records, simulate, SimulationConfig};
use crate::paths::enumerate_paths;
use crate::scenario::{prepare, run_projection, Overrides, Prepared, ScenarioStore};

#[derive(Debug, Parser)]
#[command(
    name = "coursepop",
    version,
    about = "Student population projection for self-paced programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a curriculum file.
    Validate { file: PathBuf },
    /// List every admissible tuition path.
    Paths {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the enrolment state graph (JSON unless --dot).
    Graph {
        file: PathBuf,
        /// Collapse states onto cumulative module sets.
        #[arg(long)]
        aggregate: bool,
        #[arg(long)]
        dot: bool,
    },
    /// Project expected populations for a cohort schedule.
    Project {
        #[command(flatten)]
        run: RunArgs,
        /// Print the full report as JSON.
        #[arg(long, conflicts_with = "loads")]
        json: bool,
        /// Print per-module loads instead of state populations.
        #[arg(long)]
        loads: bool,
    },
    /// Simulate individual students and print a JSON summary.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10_000)]
        replicas: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one JSON line per simulated student here.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Simulate students and write their enrolment records as CSV.
    Generate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1_000)]
        replicas: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate transition probabilities from enrolment records.
    Estimate {
        file: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        reference_year: Option<i32>,
        /// Count only this many most recent years.
        #[arg(long)]
        window: Option<u32>,
        /// Last year covered by the records.
        #[arg(long)]
        observed_through: Option<i32>,
        /// Assignment CSV used for states without evidence.
        #[arg(long)]
        fallback: Option<PathBuf>,
    },
    /// Run the scenario HTTP service.
    Serve {
        #[arg(long, env = "COURSEPOP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "COURSEPOP_STORE", default_value = "scenarios")]
        store: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    /// Assignment CSV; uniform over each state's edges when omitted.
    #[arg(long)]
    pub probs: Option<PathBuf>,
    /// Intake CSV (year,intake).
    #[arg(long)]
    pub intakes: PathBuf,
    #[arg(long)]
    pub horizon: u32,
}

/// A failed command; printed to stderr, exit status 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(pub String);

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn fail(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError(format!("{}: {e}", path.display()))
}

fn load(run: &RunArgs) -> Result<Prepared, CliError> {
    let source = read(&run.file)?;
    let assignment = match &run.probs {
        Some(p) => Some(read_assignment(&read(p)?).map_err(|e| fail(p, e))?),
        None => None,
    };
    let schedule = read_intakes(&read(&run.intakes)?).map_err(|e| fail(&run.intakes, e))?;
    prepare(&source, assignment, schedule, run.horizon).map_err(|e| {
        let mut msg = format!("{}: {}", e.code, e.message);
        for d in e.details.iter().filter(|d| **d != e.message) {
            msg.push_str(&format!("\n  {d}"));
        }
        CliError(msg)
    })
}

/// Runs one command and returns what it prints on stdout. Diagnostics such as
/// parse warnings go to `warn`.
pub fn run(cmd: &Command, warn: &mut dyn FnMut(&str)) -> Result<String, CliError> {
    match cmd {
        Command::Validate { file } => {
            let parsed = parse_curriculum_with_warnings(&read(file)?).map_err(|errors| {
                CliError(
                    errors
                        .iter()
                        .map(|e| format!("{}:{e}", file.display()))
                        .collect::<Vec<_>>()
                        .join("\n"),
                )
            })?;
            for w in &parsed.warnings {
                warn(&format!(
                    "{}:{}: warning: {}",
                    file.display(),
                    w.span,
                    w.message
                ));
            }
            let c = &parsed.curriculum;
            Ok(format!(
                "{}: ok ({} modules, {} constraints, {} paths)\n",
                c.name,
                c.modules.len(),
                c.constraints.len(),
                enumerate_paths(c).len()
            ))
        }
        Command::Paths { file, json } => {
            let c = curriculum(file)?;
            let paths = enumerate_paths(&c);
            if *json {
                return Ok(serde_json::to_string(&paths).expect("plain data") + "\n");
            }
            Ok(paths.iter().map(|p| format!("{p}\n")).collect())
        }
        Command::Graph {
            file,
            aggregate,
            dot,
        } => {
            let g = build_state_graph(&curriculum(file)?);
            Ok(match (aggregate, dot) {
                (false, false) => serde_json::to_string(&g).expect("plain data") + "\n",
                (false, true) => g.to_dot(),
                (true, false) => {
                    serde_json::to_string(&aggregate_graph(&g)).expect("plain data") + "\n"
                }
                (true, true) => aggregate_graph(&g).to_dot(),
            })
        }
        Command::Project { run, json, loads } => {
            let p = load(run)?;
            let report =
                run_projection(&p, &Overrides::default()).map_err(|e| CliError(e.to_string()))?;
            if *json {
                return Ok(serde_json::to_string(&report).expect("plain data") + "\n");
            }
            if *loads {
                return Ok(write_loads(&report.loads));
            }
            let vectors: Vec<PopulationVector> = report
                .years
                .into_iter()
                .map(|y| PopulationVector {
                    year: y.year,
                    values: y.population,
                })
                .collect();
            Ok(write_populations(&vectors, &p.graph))
        }
        Command::Simulate {
            run,
            replicas,
            seed,
            traces,
        } => {
            let p = load(run)?;
            let cfg = SimulationConfig {
                replicas: *replicas,
                seed: *seed,
                horizon: p.horizon,
                schedule: p.schedule.clone(),
                traces: traces.is_some(),
            };
            let result =
                simulate(&p.graph, &p.assignment, &cfg).map_err(|e| CliError(e.to_string()))?;
            if let Some(path) = traces {
                fs::write(path, result.traces_ndjson()).map_err(|e| fail(path, e))?;
            }
            Ok(serde_json::to_string(&result).expect("plain data") + "\n")
        }
        Command::Generate {
            run,
            replicas,
            seed,
        } => {
            let p = load(run)?;
            let cfg = SimulationConfig {
                replicas: *replicas,
                seed: *seed,
                horizon: p.horizon,
                schedule: p.schedule.clone(),
                traces: false,
            };
            let records = generate_records(&p.graph, &p.assignment, &cfg)
                .map_err(|e| CliError(e.to_string()))?;
            Ok(write_records(&records))
        }
        Command::Estimate {
            file,
            records,
            alpha,
            lambda,
            reference_year,
            window,
            observed_through,
            fallback,
        } => {
            let g = build_state_graph(&curriculum(file)?);
            let recs = read_records(&read(records)?).map_err(|e| fail(records, e))?;
            let fallback = match fallback {
                Some(f) => Some(read_assignment(&read(f)?).map_err(|e| fail(f, e))?),
                None => None,
            };
            let cfg = EstimationConfig {
                alpha: *alpha,
                lambda: *lambda,
                reference_year: *reference_year,
                window: *window,
                observed_through: *observed_through,
                fallback,
            };
            let report =
                estimate_probabilities(&recs, &g, &cfg).map_err(|e| CliError(e.to_string()))?;
            for r in &report.rejected {
                warn(&format!("rejected student {}: {}", r.student, r.reason));
            }
            for s in &report.fallback_states {
                warn(&format!("no evidence for {s}; using the fallback row"));
            }
            Ok(write_assignment(&report.assignment))
        }
        Command::Serve { port, store } => {
            let store = ScenarioStore::open(store).map_err(|e| fail(store, e))?;
            let addr = SocketAddr::from(([0, 0, 0, 0], *port));
            warn(&format!("listening on {addr}"));
            tokio::runtime::Runtime::new()
                .map_err(|e| CliError(e.to_string()))?
                .block_on(crate::scenario::serve(addr, store))
                .map_err(|e| CliError(e.to_string()))?;
            Ok(String::new())
        }
    }
}

fn curriculum(file: &Path) -> Result<crate::curriculum::Curriculum, CliError> {
    let text = read(file)?;
    crate::dsl::parse_curriculum(&text).map_err(|errors| {
        CliError(
            errors
                .iter()
                .map(|e| format!("{}:{e}", file.display()))
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })
}
