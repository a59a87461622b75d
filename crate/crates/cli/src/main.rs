mod config;
mod error;
mod report;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use wmassist_core::metrics::compute_metrics;
use wmassist_core::scenario::{parse_event_line, EventValidator};
use wmassist_core::trace::{write_record, TraceReadError};
use wmassist_core::{
    parse_scenario, read_trace, replay_with, Engine, MetricsReport, Policy, Scenario,
    ScenarioError, TraceRecord, WeightsConfig,
};

use crate::config::CliConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "wmassist",
    version,
    about = "Replay event scenarios through the working-memory assistance engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replay one scenario under one policy and print its metrics.
    Run {
        /// Scenario JSON file.
        #[arg(required_unless_present = "stdin", conflicts_with = "stdin")]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "wm")]
        policy: Policy,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON Lines trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, env = "WMASSIST_SEED")]
        seed: Option<u64>,
        /// Read events, one JSON object per line, from standard input.
        #[arg(long)]
        stdin: bool,
        #[arg(long)]
        json: bool,
    },
    /// Replay one scenario under both policies and compare.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "WMASSIST_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Summarize a trace, or show one step in detail.
    Inspect {
        trace: PathBuf,
        #[arg(long)]
        step: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            policy,
            config,
            trace,
            seed,
            stdin,
            json,
        } => {
            let opts = RunOpts {
                policy,
                config,
                trace,
                seed,
                json,
            };
            if stdin {
                run_stdin(&opts)
            } else {
                let path = scenario.expect("clap requires a scenario without --stdin");
                run(&path, &opts)
            }
        }
        Command::Compare {
            scenario,
            config,
            seed,
            json,
        } => compare(&scenario, config.as_deref(), seed, json),
        Command::Inspect { trace, step, json } => inspect(&trace, step, json),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct RunOpts {
    policy: Policy,
    config: Option<PathBuf>,
    trace: Option<PathBuf>,
    seed: Option<u64>,
    json: bool,
}

fn scenario_error(e: ScenarioError) -> CliError {
    let line = match &e {
        ScenarioError::Syntax { line, .. } => Some(*line),
        _ => None,
    };
    CliError::InvalidScenario {
        message: e.to_string(),
        line,
    }
}

fn load_scenario(path: &Path, base: &WeightsConfig<f64>) -> Result<Scenario<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::read_failure(path, e))?;
    parse_scenario(BufReader::new(file), base).map_err(scenario_error)
}

/// The scenario's effective config with the seed override applied last.
fn effective(
    scenario: &Scenario<f64>,
    base: &WeightsConfig<f64>,
    seed: Option<u64>,
) -> Result<(Scenario<f64>, WeightsConfig<f64>), CliError> {
    let mut config = scenario
        .effective_config(base)
        .map_err(|e| CliError::InvalidConfig(format!("config_overrides: {e}")))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let mut scenario = scenario.clone();
    scenario.config_overrides = None;
    Ok((scenario, config))
}

fn create_trace(path: Option<&Path>) -> Result<Option<BufWriter<File>>, CliError> {
    path.map(|p| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))
    })
    .transpose()
}

/// Streams records to the trace file and, for remote providers, stops at
/// the first step that recorded a provider failure.
struct Sink {
    out: Option<BufWriter<File>>,
    stop_on_error: bool,
    failure: Option<CliError>,
}

impl Sink {
    fn accept(&mut self, record: &TraceRecord<f64>) -> ControlFlow<()> {
        if let Some(out) = &mut self.out {
            if let Err(e) = write_record(record, out) {
                self.failure = Some(CliError::Io(format!("writing trace: {e}")));
                return ControlFlow::Break(());
            }
        }
        if self.stop_on_error {
            if let Some(first) = record.errors.first() {
                self.failure = Some(CliError::Remote {
                    step: record.step,
                    message: first.error.to_string(),
                });
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        if let Some(out) = &mut self.out {
            out.flush()
                .map_err(|e| CliError::Io(format!("writing trace: {e}")))?;
        }
        self.failure.map_or(Ok(()), Err)
    }
}

fn render_metrics(title: &str, m: &MetricsReport, json: bool) -> String {
    if json {
        format!(
            "{}\n",
            serde_json::to_string_pretty(m).expect("metrics serialize")
        )
    } else {
        report::metrics(title, m)
    }
}

fn run(path: &Path, opts: &RunOpts) -> Result<String, CliError> {
    let cli_config = CliConfig::load(opts.config.as_deref())?;
    let scenario = load_scenario(path, &cli_config.weights)?;
    let (scenario, config) = effective(&scenario, &cli_config.weights, opts.seed)?;
    let providers = cli_config.providers(&config)?;
    let mut sink = Sink {
        out: create_trace(opts.trace.as_deref())?,
        stop_on_error: cli_config.is_remote(),
        failure: None,
    };
    let replay = replay_with(&scenario, opts.policy, providers, &config, |r| {
        sink.accept(r)
    })
    .map_err(|e| CliError::Engine(e.to_string()));
    sink.finish()?;
    let replay = replay?;
    let title = format!("{} ({})", scenario.name, opts.policy);
    Ok(render_metrics(&title, &replay.metrics, opts.json))
}

fn run_stdin(opts: &RunOpts) -> Result<String, CliError> {
    let cli_config = CliConfig::load(opts.config.as_deref())?;
    let mut config = cli_config.weights.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let providers = cli_config.providers(&config)?;
    let mut engine = Engine::new(config.clone(), providers, opts.policy, "")
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let mut validator = EventValidator::new(config.embedding_dim);
    let mut sink = Sink {
        out: create_trace(opts.trace.as_deref())?,
        stop_on_error: cli_config.is_remote(),
        failure: None,
    };
    let mut trace = Vec::new();
    let stdin = io::stdin();
    let mut outcome = Ok(());
    for (i, line) in stdin.lock().lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                outcome = Err(CliError::Io(format!("reading stdin: {e}")));
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let event =
            match parse_event_line::<f64>(&line).and_then(|ev| validator.check(&ev).map(|_| ev)) {
                Ok(ev) => ev,
                Err(e) => {
                    outcome = Err(CliError::InvalidScenario {
                        message: e.to_string(),
                        line: Some(i + 1),
                    });
                    break;
                }
            };
        let record = match engine.step(&event) {
            Ok(r) => r,
            Err(e) => {
                outcome = Err(CliError::Engine(e.to_string()));
                break;
            }
        };
        let flow = sink.accept(&record);
        trace.push(record);
        if flow.is_break() {
            break;
        }
    }
    sink.finish()?;
    outcome?;
    Ok(render_metrics(
        &format!("stdin ({})", opts.policy),
        &compute_metrics(&trace),
        opts.json,
    ))
}

fn compare(
    path: &Path,
    config_path: Option<&Path>,
    seed: Option<u64>,
    json: bool,
) -> Result<String, CliError> {
    let cli_config = CliConfig::load(config_path)?;
    let scenario = load_scenario(path, &cli_config.weights)?;
    let (scenario, config) = effective(&scenario, &cli_config.weights, seed)?;
    let replay_one = |policy: Policy| -> Result<MetricsReport, CliError> {
        let providers = cli_config.providers(&config)?;
        let mut sink = Sink {
            out: None,
            stop_on_error: cli_config.is_remote(),
            failure: None,
        };
        let replay = replay_with(&scenario, policy, providers, &config, |r| sink.accept(r))
            .map_err(|e| CliError::Engine(e.to_string()));
        sink.finish()?;
        Ok(replay?.metrics)
    };
    let (wm, baseline) = std::thread::scope(|s| {
        let wm = s.spawn(|| replay_one(Policy::Wm));
        let baseline = replay_one(Policy::Baseline);
        (wm.join().expect("wm replay thread panicked"), baseline)
    });
    let (wm, baseline) = (wm?, baseline?);
    let ratio = (baseline.delivered > 0).then(|| wm.delivered as f64 / baseline.delivered as f64);
    if json {
        let body = json!({
            "scenario": scenario.name,
            "wm": wm,
            "baseline": baseline,
            "selectivity_ratio": ratio,
        });
        Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(&body).expect("report serializes")
        ))
    } else {
        Ok(report::comparison(&scenario.name, &wm, &baseline, ratio))
    }
}

fn inspect(path: &Path, step: Option<u64>, json: bool) -> Result<String, CliError> {
    let file = File::open(path).map_err(|e| CliError::read_failure(path, e))?;
    let trace: Vec<TraceRecord<f64>> = read_trace(BufReader::new(file)).map_err(|e| match e {
        TraceReadError::Malformed { line, source } => CliError::MalformedTrace {
            line,
            message: source.to_string(),
        },
        TraceReadError::Io(e) => CliError::Io(format!("reading {}: {e}", path.display())),
    })?;
    match step {
        Some(n) => {
            let record = trace.iter().find(|r| r.step == n).ok_or_else(|| {
                CliError::Usage(format!("no step {n} in trace ({} steps)", trace.len()))
            })?;
            if json {
                Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(record).expect("record serializes")
                ))
            } else {
                Ok(report::step(record))
            }
        }
        None => {
            let metrics = compute_metrics(&trace);
            if json {
                let body = json!({ "steps": trace.len(), "metrics": metrics });
                Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&body).expect("summary serializes")
                ))
            } else {
                Ok(report::summary(&trace, &metrics))
            }
        }
    }
}
