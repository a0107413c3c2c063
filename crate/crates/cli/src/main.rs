use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adhoc_sim::linkmath::{self, LinkMathError};
use adhoc_sim::scenario::{self, ConfigError, Scenario, ScenarioError};
use adhoc_sim::traffic::{write_csv, CsvRow};
use clap::{Args, Parser, Subcommand};

const EXIT_RUN: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Ad hoc routing protocol simulator (AODV, FSR, OLSR over MANET and VANET).
#[derive(Parser)]
#[command(name = "adhoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and write one CSV row.
    Run(RunArgs),
    /// Run every preset × node count × seed cell of the sweep section.
    Sweep(SweepArgs),
    /// Forecast link lifetime from a file of `t dist` samples.
    Forecast(ForecastArgs),
    /// Check a config file and print it with defaults filled in.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario config file; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long, value_name = "CSV_PATH")]
    out: Option<PathBuf>,
    /// Directory for per-run packet traces.
    #[arg(long, value_name = "DIR")]
    trace: Option<PathBuf>,
    /// Overrides the seed (for sweeps, replaces the seed list).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Maximum concurrent runs.
    #[arg(long, value_name = "N", default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Args)]
struct ForecastArgs {
    /// Whitespace-separated `t dist` pairs, one per line (seconds, meters).
    #[arg(value_name = "SAMPLES")]
    samples: PathBuf,
    /// Radio range in meters.
    #[arg(long, default_value_t = 250.0)]
    range: f64,
    /// Lookahead in seconds for the availability probability.
    #[arg(long, default_value_t = 1.0)]
    at: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

enum Failure {
    Config(Vec<String>),
    Run(Vec<String>),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config(list) => Failure::Config(config_lines(&list)),
            ScenarioError::Io { .. } => Failure::Config(vec![e.to_string()]),
            other => Failure::Run(vec![other.to_string()]),
        }
    }
}

fn config_lines(list: &[ConfigError]) -> Vec<String> {
    list.iter().map(ToString::to_string).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msgs)) => {
            for m in msgs {
                eprintln!("config error: {m}");
            }
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(msgs)) => {
            for m in msgs {
                eprintln!("error: {m}");
            }
            ExitCode::from(EXIT_RUN)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Config(vec![format!("cannot read {}: {e}", path.display())]))
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario, Failure> {
    match path {
        Some(p) => {
            let text = read_text(p)?;
            Scenario::from_config(&text).map_err(|errs| Failure::Config(config_lines(&errs)))
        }
        None => Ok(Scenario::new(scenario::NetType::Manet)),
    }
}

fn emit_csv(out: Option<&Path>, rows: &[CsvRow]) -> Result<(), Failure> {
    let io_fail = |e: String| Failure::Run(vec![e]);
    match out {
        Some(p) => {
            let file = fs::File::create(p)
                .map_err(|e| io_fail(format!("cannot create {}: {e}", p.display())))?;
            write_csv(file, rows).map_err(|e| io_fail(e.to_string()))
        }
        None => write_csv(io::stdout().lock(), rows).map_err(|e| io_fail(e.to_string())),
    }
}

fn write_trace(dir: &Path, label: &str, text: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(dir.join(format!("{label}.trace")), text))
        .map_err(|e| {
            Failure::Run(vec![format!(
                "cannot write trace into {}: {e}",
                dir.display()
            )])
        })
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut sc = load_scenario(a.common.config.as_deref())?;
    if let Some(s) = a.common.seed {
        sc.seed = s;
    }
    let out = sc.run(a.common.trace.is_some())?;
    if let (Some(dir), Some(text)) = (&a.common.trace, &out.trace) {
        write_trace(dir, &sc.run_label(), text)?;
    }
    emit_csv(a.common.out.as_deref(), &[sc.csv_row(&out)])
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let sc = load_scenario(a.common.config.as_deref())?;
    let seeds = match a.common.seed {
        Some(s) => vec![s],
        None => sc.sweep.seeds.clone(),
    };
    let outcome = scenario::sweep(
        &sc,
        &sc.sweep.node_counts,
        &seeds,
        &sc.sweep.presets,
        a.jobs,
        a.common.trace.is_some(),
    )?;
    if let Some(dir) = &a.common.trace {
        for cell in &outcome.cells {
            if let Some(text) = &cell.trace {
                write_trace(dir, &cell.label, text)?;
            }
        }
    }
    emit_csv(a.common.out.as_deref(), &outcome.rows())?;
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(
            outcome
                .failures
                .iter()
                .map(|(label, e)| format!("{label}: {e}"))
                .collect(),
        ))
    }
}

fn cmd_forecast(a: ForecastArgs) -> Result<(), Failure> {
    let text = read_text(&a.samples)?;
    let samples =
        linkmath::parse_samples(&text).map_err(|e| Failure::Config(vec![e.to_string()]))?;
    if samples.len() < 3 {
        return Err(Failure::Config(vec![format!(
            "need at least 3 samples, found {}",
            samples.len()
        )]));
    }
    if !(a.range.is_finite() && a.range > 0.0 && a.at.is_finite() && a.at >= 0.0) {
        return Err(Failure::Config(vec![
            "--range must be positive and --at non-negative".into(),
        ]));
    }
    let mut stdout = io::stdout().lock();
    let mut lines = Vec::new();
    for w in samples.windows(3) {
        let line = match linkmath::forecast([w[0], w[1], w[2]], a.range, a.at) {
            Ok(Some(f)) => format!("{:.6} {:.6} {:.6}", f.speed, f.expiry, f.prob),
            Ok(None) => "invalid".to_string(),
            Err(LinkMathError::LinkDown { .. }) => {
                let est = linkmath::estimate_speed(w[0], w[1], w[2])
                    .map_err(|e| Failure::Config(vec![e.to_string()]))?;
                let v = est.speed().unwrap_or(f64::NAN);
                format!("{v:.6} down 0")
            }
            Err(e) => return Err(Failure::Config(vec![e.to_string()])),
        };
        lines.push(line);
    }
    for l in lines {
        writeln!(stdout, "{l}").map_err(|e| Failure::Run(vec![e.to_string()]))?;
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let sc = load_scenario(Some(&a.config))?;
    print!("{}", sc.to_config());
    Ok(())
}
