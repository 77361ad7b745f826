//! `ftsim` — command-line front end for the fault-tolerance simulator.
//!
//! Two commands do the work: `run` executes a named preset or a scenario
//! file and writes a report (table presets additionally get a deviation
//! listing against the published reference rows and a strategy comparison),
//! and `dump-costmodel` prints the calibrated cost table with provenance
//! annotations for audit. `list-presets` names what `--preset` accepts.
//!
//! Exit codes: 0 on completed runs, 2 when a run finished with a failed
//! job, 1 for configuration errors (bad flags, unreadable files, schema
//! violations) and runtime faults of the simulator itself.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ftsim_core::engine::{run_trials, Mode, RootResult, Scenario, Trace, TrialAggregate};
use ftsim_core::presets::{self, PresetSpec, TablePreset};
use ftsim_core::report::{
    compare_strategies, deviations, emit_deviations, emit_table, format_hms, summarize,
    TableFormat, GAP,
};
use ftsim_core::strategy::{ChargeKind, CostModel, CostModelPatch};

const EXIT_JOB_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "ftsim", version, about = "Deterministic fault-tolerance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or scenario file and write its report.
    Run(RunArgs),
    /// Print the calibrated cost model with provenance annotations.
    DumpCostmodel(DumpArgs),
    /// List the built-in presets.
    ListPresets,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON, one `Scenario` object). Exactly one of
    /// --scenario/--preset must be given.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Built-in preset name (see `list-presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Seed override. Falls back to the FTSIM_SEED environment variable,
    /// then to the seed in the scenario itself.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count override (trial i reseeds with seed + i).
    #[arg(long)]
    trials: Option<u32>,
    /// Parallel trial workers. The default of 1 keeps runs bit-stable on
    /// any machine; higher values change nothing but wall time.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Report format: csv, json or markdown.
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force timing or emulation mode regardless of the scenario.
    #[arg(long)]
    mode: Option<String>,
    /// Also write every trace (full event logs, JSON) to this file.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    /// JSON file with cost overrides: either a partial patch or a full
    /// model, merged entry-by-entry over the defaults.
    #[arg(long)]
    overrides: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::DumpCostmodel(args) => cmd_dump_costmodel(args),
        Command::ListPresets => cmd_list_presets(),
    }
}

fn cmd_list_presets() -> Result<ExitCode> {
    for preset in presets::all() {
        println!("{} — {}", preset.name, preset.description);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let format = TableFormat::from_str(&args.format)
        .map_err(|e| anyhow!("{e} (expected csv, json or markdown)"))?;
    let mode = args.mode.as_deref().map(parse_mode).transpose()?;
    let seed = resolve_seed(args.seed)?;

    let (document, exit, traces_json) = match (&args.scenario, &args.preset) {
        (Some(_), Some(_)) | (None, None) => {
            bail!("exactly one of --scenario or --preset is required")
        }
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading scenario file {}", path.display()))?;
            let scenario: Scenario = serde_json::from_str(&text)
                .map_err(|e| anyhow!("scenario file rejected by schema: {e}"))?;
            run_single(&path.display().to_string(), scenario, &args, format, seed, mode)?
        }
        (None, Some(name)) => {
            let preset = presets::lookup(name).ok_or_else(|| {
                anyhow!(
                    "unknown preset '{name}'; available: {}",
                    presets::PRESET_NAMES.join(", ")
                )
            })?;
            match preset.spec {
                PresetSpec::Table(table) => {
                    run_table(preset.name, preset.description, table, &args, format, seed, mode)?
                }
                PresetSpec::Single(scenario) => {
                    run_single(preset.name, scenario, &args, format, seed, mode)?
                }
            }
        }
    };

    match &args.out {
        Some(path) => fs::write(path, document)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{document}"),
    }
    if let (Some(path), Some(json)) = (&args.trace_out, traces_json) {
        fs::write(path, serde_json::to_string_pretty(&json)? + "\n")
            .with_context(|| format!("writing traces to {}", path.display()))?;
    }
    Ok(exit)
}

fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "timing" => Ok(Mode::Timing),
        "emulation" => Ok(Mode::Emulation),
        other => bail!("unknown mode '{other}' (expected timing or emulation)"),
    }
}

/// Flag beats environment; environment beats the scenario's own seed.
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("FTSIM_SEED") {
        Ok(v) => Ok(Some(v.parse().map_err(|_| {
            anyhow!("FTSIM_SEED must be an unsigned integer, got '{v}'")
        })?)),
        Err(_) => Ok(None),
    }
}

fn apply_overrides(scenario: &mut Scenario, seed: Option<u64>, mode: Option<Mode>) {
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(mode) = mode {
        scenario.mode = mode;
    }
}

/// Runs one whole table preset: composed rows, deviations against the
/// published reference, the overhead comparison, and the preset's notes.
fn run_table(
    name: &str,
    description: &str,
    mut table: TablePreset,
    args: &RunArgs,
    format: TableFormat,
    seed: Option<u64>,
    mode: Option<Mode>,
) -> Result<(String, ExitCode, Option<serde_json::Value>)> {
    for row in &mut table.rows {
        for scenario in row.scenarios_mut() {
            apply_overrides(scenario, seed, mode);
        }
    }
    let rows = table.run(args.trials, args.jobs).context("table run failed")?;
    let summaries: Vec<_> = rows.iter().map(summarize).collect();
    let devs = deviations(&summaries, &table.reference);
    let comparison = compare_strategies(&summaries);

    let table_doc = emit_table(&summaries, format)?;
    let devs_doc = emit_deviations(&devs, format)?;
    let cmp_doc = comparison.render(format)?;

    let document = match format {
        TableFormat::Markdown => {
            let notes: String = table.notes.iter().map(|n| format!("- {n}\n")).collect();
            format!(
                "# {name}\n\n{description}\n\n## composed execution times\n\n{table_doc}\n\
                 ## deviations from the reference rows\n\n{devs_doc}\n\
                 ## strategy comparison\n\n{cmp_doc}\n## notes\n\n{notes}"
            )
        }
        TableFormat::Csv => format!("{table_doc}\n{devs_doc}\n{cmp_doc}"),
        TableFormat::Json => {
            let doc = serde_json::json!({
                "preset": name,
                "description": description,
                "summaries": summaries,
                "deviations": devs,
                "comparison": comparison,
                "notes": table.notes,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };

    let all_completed = rows.iter().flat_map(row_traces).all(Trace::completed);
    let exit = if all_completed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_JOB_FAILED) };

    let traces_json = args.trace_out.as_ref().map(|_| {
        let cells: Vec<_> = rows
            .iter()
            .flat_map(|r| {
                let columns = [&r.no_failure, &r.one_periodic, &r.one_random, &r.five_random];
                presets::TableRowSpec::COLUMNS
                    .into_iter()
                    .zip(columns)
                    .map(|(column, traces)| {
                        serde_json::json!({
                            "strategy": r.strategy,
                            "periodicity_s": r.periodicity_s,
                            "column": column,
                            "traces": traces,
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        serde_json::Value::Array(cells)
    });
    Ok((document, exit, traces_json))
}

fn row_traces(row: &ftsim_core::report::RowRuns) -> impl Iterator<Item = &Trace> {
    row.no_failure
        .iter()
        .chain(&row.one_periodic)
        .chain(&row.one_random)
        .chain(&row.five_random)
}

/// Runs one scenario for its trials and reports per-trial outcomes.
fn run_single(
    label: &str,
    mut scenario: Scenario,
    args: &RunArgs,
    format: TableFormat,
    seed: Option<u64>,
    mode: Option<Mode>,
) -> Result<(String, ExitCode, Option<serde_json::Value>)> {
    apply_overrides(&mut scenario, seed, mode);
    let trials = args.trials.unwrap_or(scenario.trials);
    let report = run_trials(&scenario, trials, args.jobs).context("run failed")?;

    let document = render_single(label, &scenario, &report.traces, &report.aggregate, format)?;
    let all_completed = report.traces.iter().all(Trace::completed);
    let exit = if all_completed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_JOB_FAILED) };

    let traces_json = args.trace_out.as_ref().map(|_| {
        serde_json::json!({
            "label": label,
            "traces": report.traces,
        })
    });
    Ok((document, exit, traces_json))
}

fn render_single(
    label: &str,
    scenario: &Scenario,
    traces: &[Trace],
    aggregate: &TrialAggregate,
    format: TableFormat,
) -> Result<String> {
    let result_cell = |t: &Trace| match &t.root_result {
        Some(RootResult::ReductionSum { sum }) => format!("sum {sum}"),
        Some(RootResult::GenomeSearch { hits }) => format!("{} hits", hits.len()),
        None => GAP.to_string(),
    };
    let status_cell = |t: &Trace| if t.completed() { "completed" } else { "failed" };
    let faults = |t: &Trace| {
        t.breakdowns.iter().filter(|b| b.charge.kind != ChargeKind::FalseAlarm).count()
    };
    let false_alarms = |t: &Trace| {
        t.breakdowns.iter().filter(|b| b.charge.kind == ChargeKind::FalseAlarm).count()
    };

    let doc = match format {
        TableFormat::Json => {
            let doc = serde_json::json!({
                "label": label,
                "scenario": scenario,
                "traces": traces,
                "aggregate": aggregate,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        TableFormat::Csv => {
            let mut out = String::from("trial,status,total_s,faults,false_alarms,result\n");
            for (i, t) in traces.iter().enumerate() {
                out.push_str(&format!(
                    "{i},{},{:.3},{},{},{}\n",
                    status_cell(t),
                    t.total_ms as f64 / 1_000.0,
                    faults(t),
                    false_alarms(t),
                    result_cell(t),
                ));
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = format!(
                "# {label}\n\nstrategy: {} | mode: {} | seed: {} | trials: {}\n\n\
                 | trial | status | total | faults | false alarms | result |\n\
                 | --- | --- | --- | --- | --- | --- |\n",
                scenario.strategy,
                match scenario.mode {
                    Mode::Timing => "timing",
                    Mode::Emulation => "emulation",
                },
                scenario.seed,
                traces.len(),
            );
            for (i, t) in traces.iter().enumerate() {
                out.push_str(&format!(
                    "| {i} | {} | {} | {} | {} | {} |\n",
                    status_cell(t),
                    format_hms(t.total_ms as f64 / 1_000.0),
                    faults(t),
                    false_alarms(t),
                    result_cell(t),
                ));
            }
            out.push_str(&format!(
                "\naggregate: {}/{} completed; total mean {} (min {}, max {})\n",
                aggregate.completed,
                aggregate.trials,
                format_hms(aggregate.total.mean_ms / 1_000.0),
                format_hms(aggregate.total.min_ms as f64 / 1_000.0),
                format_hms(aggregate.total.max_ms as f64 / 1_000.0),
            ));
            out
        }
    };
    Ok(doc)
}

fn cmd_dump_costmodel(args: DumpArgs) -> Result<ExitCode> {
    let mut model = CostModel::default();
    if let Some(path) = &args.overrides {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading overrides file {}", path.display()))?;
        let patch: CostModelPatch = serde_json::from_str(&text)
            .map_err(|e| anyhow!("overrides file rejected by schema: {e}"))?;
        model.apply_patch(&patch);
        model
            .validate()
            .map_err(|e| anyhow!("overridden cost model invalid: {e}"))?;
    }
    let doc = serde_json::json!({
        "model": model,
        "annotated": model.annotated(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(ExitCode::SUCCESS)
}
