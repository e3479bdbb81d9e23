use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ehrelay::{PolicyOutcome, PolicyTag, SolverConfig};
use ehrelay_bench::compare::{render_csv, render_json, render_markdown};
use ehrelay_bench::scenario::{save_scenarios, scenarios_to_toml};
use ehrelay_bench::{
    emit_staircase, generate_poisson, load_scenario, load_scenarios, run_comparison, run_policy, save_result,
    BenchError, ResultRecord, Scenario,
};

/// Offline power allocation for an energy-harvesting relay channel.
#[derive(Parser)]
#[command(name = "ehrelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate power for one scenario with one policy.
    Alloc {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyTag,
        /// Write the full result as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every policy on a batch of scenarios.
    Compare {
        /// Scenario files, or directories whose `*.toml` files are read.
        #[arg(long, num_args = 1.., required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Generate Poisson harvest scenarios on the default channel.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        /// Mean harvest per instant in mJ.
        #[arg(long)]
        mean: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        instants: Vec<f64>,
        #[arg(long)]
        deadline: f64,
        /// Write the scenario set here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export cumulative harvested/consumed curves as CSV.
    Staircase {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyTag,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
    Json,
}

fn parse_policy(s: &str) -> Result<PolicyTag, String> {
    s.parse().map_err(|e: ehrelay::Error| e.to_string())
}

/// Success, or a policy gate that declined (exit 3).
enum Done {
    Ok,
    NotApplicable,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::NotApplicable) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<Done, BenchError> {
    let cfg = SolverConfig::default();
    match command {
        Command::Alloc { scenario, policy, out } => {
            let s = load_scenario(&scenario)?;
            let outcome = run_policy(&s, policy, &cfg)?;
            let record = ResultRecord::new(&s, policy, &outcome);
            if let Some(path) = out {
                save_result(&record, &path)?;
            }
            print_summary(&record)?;
            if let PolicyOutcome::NotApplicable(g) = &outcome {
                eprintln!("{policy} does not apply to `{}`: {}", s.name, g.reason);
                return Ok(Done::NotApplicable);
            }
        }
        Command::Compare { scenarios, format } => {
            let mut all = Vec::new();
            for path in expand(&scenarios)? {
                all.extend(load_scenarios(&path)?);
            }
            let rows = run_comparison(&all, &cfg);
            let text = match format {
                Format::Md => render_markdown(&rows),
                Format::Csv => render_csv(&rows)?,
                Format::Json => render_json(&rows),
            };
            stdout(&text)?;
        }
        Command::Gen {
            seed,
            count,
            mean,
            instants,
            deadline,
            out,
        } => {
            let set = generate(seed, count, mean, &instants, deadline)?;
            match out {
                Some(path) => save_scenarios(&set, &path)?,
                None => stdout(&scenarios_to_toml(&set))?,
            }
        }
        Command::Staircase { scenario, policy, out } => {
            let s = load_scenario(&scenario)?;
            match run_policy(&s, policy, &cfg)? {
                PolicyOutcome::Allocated(r) => emit_staircase(&s, &r, &out)?,
                PolicyOutcome::NotApplicable(g) => {
                    eprintln!("{policy} does not apply to `{}`: {}", s.name, g.reason);
                    return Ok(Done::NotApplicable);
                }
            }
        }
    }
    Ok(Done::Ok)
}

fn generate(seed: u64, count: usize, mean: f64, instants: &[f64], deadline: f64) -> Result<Vec<Scenario>, BenchError> {
    let invalid = |msg: String| BenchError::Validation {
        context: "gen".into(),
        source: ehrelay::Error::Invalid(msg),
    };
    if !(mean > 0.0 && mean <= ehrelay_bench::generate::MAX_MEAN) {
        return Err(invalid(format!(
            "--mean must lie in (0, {}], got {mean}",
            ehrelay_bench::generate::MAX_MEAN
        )));
    }
    // Validate the grid once with dummy harvests so bad flags do not panic.
    let ones = vec![1.0; instants.len()];
    ehrelay::EHProfile::new(instants.to_vec(), ones.clone(), ones, deadline).map_err(|source| {
        BenchError::Validation {
            context: "gen".into(),
            source,
        }
    })?;
    Ok(generate_poisson(seed, count, mean, instants, deadline))
}

/// Directories contribute their `*.toml` files in name order.
fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>, BenchError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let io = |source| BenchError::Io { path: p.clone(), source };
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "toml"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn print_summary(r: &ResultRecord) -> Result<(), BenchError> {
    let mut text = format!("scenario: {}\npolicy: {}\n", r.scenario, r.policy);
    if let Some(t) = r.throughput {
        text += &format!("throughput: {t:.4} Mbits\n");
        for (node, segs) in [("source", &r.source_segments), ("relay", &r.relay_segments)] {
            let parts: Vec<String> = segs
                .iter()
                .map(|s| format!("{:.6} mW x {} s", s.power, s.duration))
                .collect();
            text += &format!("{node}: {}\n", parts.join(", "));
        }
        if let Some(a) = &r.allocation {
            if !a.transfers.is_zero() {
                text += &format!(
                    "transfers to relay: {:?}\ntransfers to source: {:?}\n",
                    a.transfers.to_relay(),
                    a.transfers.to_source()
                );
            }
        }
    }
    stdout(&text)
}

fn stdout(text: &str) -> Result<(), BenchError> {
    std::io::stdout().write_all(text.as_bytes()).map_err(|source| BenchError::Io {
        path: Path::new("<stdout>").to_path_buf(),
        source,
    })
}
