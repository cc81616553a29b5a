use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hybrid_hopf::cubical::euler_stable;
use hybrid_hopf::execution::{simulate_execution, BranchPolicy, ExecutionLimits};
use hybrid_hopf::report::{emit_report, Format};
use hybrid_hopf::scenario::{load_scenario, Scenario};
use hybrid_hopf::verify::{run_zoo, verify_scenario, Verdict, VerificationLedger, VerifyOptions};

const EXIT_FAIL: u8 = 1;
const EXIT_INCOMPLETE: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hybrid-hopf",
    version,
    about = "Verify index identities of hybrid systems"
)]
struct Cli {
    /// Grid spacing for Euler characteristics.
    #[arg(long, global = true)]
    resolution: Option<f64>,
    /// Flow time of the rescaled semiflow.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Output format: human, tsv or structured.
    #[arg(long, global = true, default_value = "human")]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every route on scenario files.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run the built-in scenarios.
    Zoo {
        /// Glob over scenario names.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Certified zeros and their indices.
    Index { file: PathBuf },
    /// Euler characteristic of each flow set.
    Euler { file: PathBuf },
    /// Guard index of each mode by every available route.
    GuardIndex { file: PathBuf },
    /// Simulate one execution.
    Simulate {
        file: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long)]
        horizon: f64,
        /// Defaults to the first mode.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_enum, default_value_t = Policy::Priority)]
        policy: Policy,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Priority,
    Random,
}

struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn read_scenario(path: &PathBuf) -> Result<Scenario, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    load_scenario(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn verdict_code(ledgers: &[VerificationLedger]) -> u8 {
    if ledgers
        .iter()
        .any(|l| matches!(l.verdict, Verdict::Fail(_)))
    {
        EXIT_FAIL
    } else if ledgers
        .iter()
        .any(|l| matches!(l.verdict, Verdict::Incomplete(_)))
    {
        EXIT_INCOMPLETE
    } else {
        0
    }
}

fn opt(v: Option<i64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn print_table(
    out: &mut String,
    format: Format,
    header: &[&str],
    rows: &[Vec<String>],
    json: serde_json::Value,
) {
    match format {
        Format::Structured => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&json).unwrap());
        }
        Format::Tsv => {
            let _ = writeln!(out, "{}", header.join("\t"));
            for r in rows {
                let _ = writeln!(out, "{}", r.join("\t"));
            }
        }
        Format::Human => {
            for r in rows {
                let cells: Vec<String> = header
                    .iter()
                    .zip(r)
                    .map(|(h, c)| format!("{h}={}", if c.is_empty() { "-" } else { c }))
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  "));
            }
        }
    }
}

fn run(cli: Cli, out: &mut String) -> Result<u8, UsageError> {
    let options = VerifyOptions {
        resolution: cli.resolution,
        tau: cli.tau,
        seed: cli.seed,
    };
    match cli.command {
        Command::Verify { files } => {
            let scenarios = files
                .iter()
                .map(read_scenario)
                .collect::<Result<Vec<_>, _>>()?;
            let ledgers = scenarios
                .iter()
                .map(|s| verify_scenario(s, &options))
                .collect::<Result<Vec<_>, _>>()?;
            out.push_str(&emit_report(&ledgers, cli.format));
            Ok(verdict_code(&ledgers))
        }
        Command::Zoo { filter } => {
            let ledgers = run_zoo(filter.as_deref(), &options)?;
            out.push_str(&emit_report(&ledgers, cli.format));
            Ok(verdict_code(&ledgers))
        }
        Command::Index { file } => {
            let ledger = verify_scenario(&read_scenario(&file)?, &options)?;
            let header = ["mode", "zero", "ind_F", "ind_neg_F", "interior", "radius"];
            let rows: Vec<Vec<String>> = ledger
                .zeros
                .iter()
                .map(|z| {
                    let coords: Vec<String> = z.z.iter().map(|c| format!("{c:.9}")).collect();
                    vec![
                        z.mode.clone(),
                        coords.join(","),
                        z.index_of_f.to_string(),
                        z.index_of_neg_f.to_string(),
                        opt(z.interior_index),
                        z.isolation_radius.to_string(),
                    ]
                })
                .collect();
            print_table(out, cli.format, &header, &rows, json!(ledger.zeros));
            let failed = ledger
                .modes
                .iter()
                .any(|m| m.errors.iter().any(|e| e.starts_with("zeros")));
            Ok(if failed { EXIT_INCOMPLETE } else { 0 })
        }
        Command::Euler { file } => {
            let built = options.apply(&read_scenario(&file)?).build()?;
            let mut rows = Vec::new();
            let mut code = 0;
            for m in built.system.modes() {
                let chi = match euler_stable(&m.region, built.resolution) {
                    Ok(c) => c.to_string(),
                    Err(e) => {
                        eprintln!("{}: {e}", m.id);
                        code = EXIT_INCOMPLETE;
                        String::new()
                    }
                };
                rows.push(vec![m.id.clone(), m.dim().to_string(), chi]);
            }
            let json = json!(rows
                .iter()
                .map(|r| json!({"mode": r[0], "dim": r[1], "chi": r[2]}))
                .collect::<Vec<_>>());
            print_table(out, cli.format, &["mode", "dim", "chi"], &rows, json);
            Ok(code)
        }
        Command::GuardIndex { file } => {
            let ledger = verify_scenario(&read_scenario(&file)?, &options)?;
            let header = [
                "mode",
                "tau",
                "xi_direct",
                "inflowing_status",
                "chi_G",
                "xi_rearranged",
            ];
            let rows: Vec<Vec<String>> = ledger
                .modes
                .iter()
                .map(|m| {
                    vec![
                        m.id.clone(),
                        m.tau.map(|t| t.to_string()).unwrap_or_default(),
                        opt(m.xi_direct),
                        m.inflowing_status.clone().unwrap_or_default(),
                        opt(m.chi_g),
                        opt(m.chi_s.zip(m.lhs).map(|(c, l)| c - l)),
                    ]
                })
                .collect();
            for m in &ledger.modes {
                for e in &m.errors {
                    eprintln!("{}: {e}", m.id);
                }
            }
            print_table(out, cli.format, &header, &rows, json!(ledger.modes));
            Ok(verdict_code(std::slice::from_ref(&ledger)))
        }
        Command::Simulate {
            file,
            start,
            horizon,
            mode,
            policy,
        } => {
            let built = options.apply(&read_scenario(&file)?).build()?;
            let start = start
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| UsageError(format!("--start: {e}")))?;
            let mode = mode.unwrap_or_else(|| built.system.modes()[0].id.clone());
            let policy = match policy {
                Policy::Priority => BranchPolicy::Priority,
                Policy::Random => BranchPolicy::Random { seed: built.seed },
            };
            let trace = simulate_execution(
                &built.system,
                &mode,
                &start,
                horizon,
                policy,
                &ExecutionLimits::default(),
            )?;
            match cli.format {
                Format::Structured => {
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&trace).unwrap());
                }
                Format::Tsv => out.push_str(&trace.to_tsv()),
                Format::Human => {
                    let _ = writeln!(
                        out,
                        "{} jumps, ended at t = {} ({:?})",
                        trace.jumps.len(),
                        trace.end_time(),
                        trace.termination
                    );
                    for j in &trace.jumps {
                        let _ = writeln!(
                            out,
                            "  t = {:.10}  {} -> {}  {:?} -> {:?}",
                            j.time, j.source, j.target, j.pre, j.post
                        );
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let mut out = String::new();
    let result = run(cli, &mut out);
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
