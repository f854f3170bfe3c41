//! Run orchestration and report emission behind the command-line interface.
//!
//! `run` simulates the configured scenarios and writes, per scenario, the
//! yearly ledger CSV, a KPI JSON and an economics JSON, plus combined KPI
//! and economics CSVs, an optional per-minute trace and a run manifest.
//! `sweep` runs the 266-case SOC study with a resumable progress store.
//! `validate` dry-runs the config and returns diagnostics. `rerender`
//! rebuilds the CSV mirrors from previously written JSON reports.

use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::battery::BatteryError;
use crate::config::{ConfigError, Diagnostic, RunConfig};
use crate::dispatch::{
    simulate_horizon_with, DispatchError, HorizonInputs, PlantSpec, ScenarioId,
};
use crate::economics::{self, EconError, EconReport, Rates};
use crate::kpi::{compute_kpis, KpiError, KpiReport};
use crate::report::{
    fnv1a_hash, write_econ_csv, write_json, write_kpi_csv, write_ledger_csv, write_sweep_csv,
    Manifest, TraceWriter,
};
use crate::sweep::{run_sweep, rank, SweepError, SweepInputs, SweepStore};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("configuration invalid: {}", format_diagnostics(.0))]
    Diagnostics(Vec<Diagnostic>),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Kpi(#[from] KpiError),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl CliError {
    /// 2 for configuration problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Diagnostics(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files written by a command.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    fnv1a_hash(canonical.as_bytes())
}

/// Economics rates capped to the simulated span (replacement stays in the
/// final simulated year).
fn effective_rates(config: &RunConfig) -> Rates {
    let years = config.run.years;
    Rates {
        horizon_years: years,
        replacement_year: config.rates.replacement_year.min(years),
        ..config.rates
    }
}

struct ScenarioArtifacts {
    id: ScenarioId,
    kpi: KpiReport,
    econ: EconReport,
    files: Vec<PathBuf>,
}

fn run_one_scenario(
    config: &RunConfig,
    id: ScenarioId,
    out_dir: &Path,
    pv: &crate::profiles::MinuteSeries,
    load: &crate::profiles::MinuteSeries,
) -> Result<ScenarioArtifacts, CliError> {
    let policy = config.policy(id);
    let plant = PlantSpec::for_scenario(id, config.vrfb_spec(), config.lib_spec());
    let inputs = HorizonInputs {
        pv_base: pv,
        load_base: load,
        scaling: config.scaling,
        aging: config.aging,
        years: config.run.years,
        offpeak_window: config.tariff.offpeak_window,
    };

    let mut files = Vec::new();
    let outcome = if config.run.trace {
        let trace_path = out_dir.join(format!("trace_{id}.csv"));
        let file = std::fs::File::create(&trace_path).map_err(io_err(&trace_path))?;
        let mut trace = TraceWriter::new(BufWriter::new(file)).map_err(io_err(&trace_path))?;
        let mut trace_err = None;
        let outcome = simulate_horizon_with(&policy, &plant, &inputs, |obs| {
            if trace_err.is_none() {
                if let Err(e) = trace.record(obs) {
                    trace_err = Some(e);
                }
            }
        })?;
        if let Some(e) = trace_err {
            return Err(io_err(&trace_path)(e));
        }
        files.push(trace_path);
        outcome
    } else {
        crate::dispatch::simulate_horizon(&policy, &plant, &inputs)?
    };

    let kpi = compute_kpis(&outcome.ledgers)?;
    let econ = economics::evaluate(
        &outcome.ledgers,
        &config.tariff,
        &config.costs,
        &effective_rates(config),
        config.system_config(id),
    )?;

    let ledger_path = out_dir.join(format!("ledger_{id}.csv"));
    let mut buf = Vec::new();
    write_ledger_csv(&mut buf, &outcome.ledgers).map_err(io_err(&ledger_path))?;
    std::fs::write(&ledger_path, buf).map_err(io_err(&ledger_path))?;
    files.push(ledger_path);

    let kpi_path = out_dir.join(format!("kpi_{id}.json"));
    write_json(&kpi_path, &kpi).map_err(io_err(&kpi_path))?;
    files.push(kpi_path);

    let econ_path = out_dir.join(format!("economics_{id}.json"));
    write_json(&econ_path, &econ).map_err(io_err(&econ_path))?;
    files.push(econ_path);

    Ok(ScenarioArtifacts {
        id,
        kpi,
        econ,
        files,
    })
}

fn in_worker_pool<T: Send>(
    workers: usize,
    job: impl FnOnce() -> T + Send,
) -> T {
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(job)
    }
}

/// Executes the configured scenarios and writes all reports.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let diagnostics = config.validate();
    if !diagnostics.is_empty() {
        return Err(CliError::Diagnostics(diagnostics));
    }
    ensure_out_dir(out_dir)?;
    let ids = config.scenario_ids()?;
    let (pv, load) = config.load_profiles()?;

    let artifacts: Vec<ScenarioArtifacts> = in_worker_pool(config.run.workers, || {
        ids.par_iter()
            .map(|&id| run_one_scenario(config, id, out_dir, &pv, &load))
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let mut files: Vec<PathBuf> = artifacts.iter().flat_map(|a| a.files.clone()).collect();

    let kpi_csv_path = out_dir.join("kpi.csv");
    let mut buf = Vec::new();
    write_kpi_csv(
        &mut buf,
        artifacts.iter().map(|a| (a.id.as_str(), &a.kpi)),
    )
    .map_err(io_err(&kpi_csv_path))?;
    std::fs::write(&kpi_csv_path, buf).map_err(io_err(&kpi_csv_path))?;
    files.push(kpi_csv_path);

    let econ_csv_path = out_dir.join("economics.csv");
    let mut buf = Vec::new();
    let columns: Vec<(&str, &EconReport)> =
        artifacts.iter().map(|a| (a.id.as_str(), &a.econ)).collect();
    write_econ_csv(&mut buf, &columns).map_err(io_err(&econ_csv_path))?;
    std::fs::write(&econ_csv_path, buf).map_err(io_err(&econ_csv_path))?;
    files.push(econ_csv_path);

    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = Manifest::new("run", config_hash(config), files.clone());
    manifest.timing.wall_time_s = started.elapsed().as_secs_f64();
    write_json(&manifest_path, &manifest).map_err(io_err(&manifest_path))?;
    files.push(manifest_path);

    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        files,
    })
}

/// Runs the SOC-range sweep for the configured use case.
pub fn sweep(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let diagnostics = config.validate();
    if !diagnostics.is_empty() {
        return Err(CliError::Diagnostics(diagnostics));
    }
    ensure_out_dir(out_dir)?;
    let use_case = config.use_case()?;
    let (pv, load) = config.load_profiles()?;

    let inputs = SweepInputs {
        pv_base: &pv,
        load_base: &load,
        scaling: config.scaling,
        aging: config.aging,
        years: config.run.years,
        offpeak_window: config.tariff.offpeak_window,
        vrfb_spec: config.vrfb_spec(),
        lib_spec: config.lib_spec(),
        alpha: config.allocation.alpha,
        tariff: config.tariff,
        cost: config.costs,
        rates: config.rates,
    };

    let store = config
        .sweep
        .resume
        .then(|| SweepStore::new(out_dir.join(format!("sweep_{use_case}_progress.jsonl"))));
    let results = run_sweep(use_case, &inputs, config.run.workers, store.as_ref())?;
    let ranking = rank(&results, config.sweep.secondary_priority)?;

    let mut files = Vec::new();
    let csv_path = out_dir.join(format!("sweep_{use_case}.csv"));
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &results).map_err(io_err(&csv_path))?;
    std::fs::write(&csv_path, buf).map_err(io_err(&csv_path))?;
    files.push(csv_path);

    let ranking_path = out_dir.join(format!("ranking_{use_case}.json"));
    write_json(&ranking_path, &ranking).map_err(io_err(&ranking_path))?;
    files.push(ranking_path);

    if let Some(store) = &store {
        store.finalize()?;
    }

    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = Manifest::new("sweep", config_hash(config), files.clone());
    manifest.timing.wall_time_s = started.elapsed().as_secs_f64();
    write_json(&manifest_path, &manifest).map_err(io_err(&manifest_path))?;
    files.push(manifest_path);

    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        files,
    })
}

/// Dry-run configuration check; never simulates.
pub fn validate(config: &RunConfig) -> Vec<Diagnostic> {
    config.validate()
}

/// Rebuilds the combined CSV mirrors from JSON reports in a directory.
pub fn rerender(out_dir: &Path) -> Result<RunOutcome, CliError> {
    let mut kpi_rows: Vec<(String, KpiReport)> = Vec::new();
    let mut econ_columns: Vec<(String, EconReport)> = Vec::new();

    let entries = std::fs::read_dir(out_dir).map_err(io_err(out_dir))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(String::from))
        .collect();
    names.sort();

    for name in &names {
        let path = out_dir.join(name);
        if let Some(scenario) = name
            .strip_prefix("kpi_")
            .and_then(|n| n.strip_suffix(".json"))
        {
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let report: KpiReport = serde_json::from_str(&text)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
            kpi_rows.push((scenario.to_string(), report));
        } else if let Some(scenario) = name
            .strip_prefix("economics_")
            .and_then(|n| n.strip_suffix(".json"))
        {
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let report: EconReport = serde_json::from_str(&text)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
            econ_columns.push((scenario.to_string(), report));
        }
    }

    if kpi_rows.is_empty() && econ_columns.is_empty() {
        return Err(ConfigError::Invalid(format!(
            "no kpi_*.json or economics_*.json reports in {}",
            out_dir.display()
        ))
        .into());
    }

    let mut files = Vec::new();
    if !kpi_rows.is_empty() {
        let path = out_dir.join("kpi.csv");
        let mut buf = Vec::new();
        write_kpi_csv(&mut buf, kpi_rows.iter().map(|(n, k)| (n.as_str(), k)))
            .map_err(io_err(&path))?;
        std::fs::write(&path, buf).map_err(io_err(&path))?;
        files.push(path);
    }
    if !econ_columns.is_empty() {
        let path = out_dir.join("economics.csv");
        let mut buf = Vec::new();
        let columns: Vec<(&str, &EconReport)> = econ_columns
            .iter()
            .map(|(n, r)| (n.as_str(), r))
            .collect();
        write_econ_csv(&mut buf, &columns).map_err(io_err(&path))?;
        std::fs::write(&path, buf).map_err(io_err(&path))?;
        files.push(path);
    }

    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        files,
    })
}
