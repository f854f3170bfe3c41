//! Report emission: ledger/KPI/economics CSVs, JSON mirrors, the per-minute
//! trace and the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so report
//! bytes are a pure function of the numbers. Volatile data (wall clock) is
//! confined to the manifest's `timing` object.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dispatch::{EnergyLedger, StepObservation};
use crate::economics::EconReport;
use crate::kpi::KpiReport;

pub const LEDGER_CSV_HEADER: &str = "year,pv_wh,load_wh,import_wh,export_wh,vrfb_charge_wh,vrfb_discharge_wh,lib_charge_wh,lib_discharge_wh,standby_wh,loss_wh";

pub const KPI_CSV_HEADER: &str = "scenario,scr,ssr,grf,fgu,tgu,fbu_vrfb,fbu_lib,tbu_vrfb,tbu_lib,obu_vrfb,obu_lib,eg_kwh";

pub const SWEEP_CSV_HEADER: &str =
    "use_case,vrfb_min,vrfb_max,lib_min,lib_max,scr,lcoe,obu_vrfb,obu_lib,npv";

pub const TRACE_CSV_HEADER: &str = "year,minute,pv_w,load_w,pv_to_load_w,pv_to_vrfb_w,pv_to_lib_w,vrfb_to_load_w,lib_to_load_w,grid_import_w,grid_export_w,standby_w,loss_vrfb_w,loss_lib_w,soc_vrfb,soc_lib";

pub fn write_ledger_csv(mut w: impl Write, ledgers: &[EnergyLedger]) -> std::io::Result<()> {
    writeln!(w, "{LEDGER_CSV_HEADER}")?;
    for l in ledgers {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            l.year,
            l.pv_wh,
            l.load_wh,
            l.grid_import_wh,
            l.grid_export_wh,
            l.vrfb_charge_wh,
            l.vrfb_discharge_wh,
            l.lib_charge_wh,
            l.lib_discharge_wh,
            l.standby_wh,
            l.loss_total_wh(),
        )?;
    }
    Ok(())
}

pub fn write_kpi_csv<'a>(
    mut w: impl Write,
    rows: impl IntoIterator<Item = (&'a str, &'a KpiReport)>,
) -> std::io::Result<()> {
    writeln!(w, "{KPI_CSV_HEADER}")?;
    for (name, k) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            name,
            k.scr,
            k.ssr,
            k.grf,
            k.fgu,
            k.tgu,
            k.fbu_vrfb,
            k.fbu_lib,
            k.tbu_vrfb,
            k.tbu_lib,
            k.obu_vrfb,
            k.obu_lib,
            k.eg_kwh,
        )?;
    }
    Ok(())
}

/// Economics CSV mirroring the investment/NPV/LCOE/IRR/SPB table: one
/// parameter per row, one scenario per column.
pub fn write_econ_csv<'a>(
    mut w: impl Write,
    columns: &[(&'a str, &'a EconReport)],
) -> std::io::Result<()> {
    let fmt_opt = |v: Option<f64>| v.map_or(String::from(""), |x| x.to_string());
    write!(w, "parameter")?;
    for (name, _) in columns {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    writeln!(
        w,
        "total_investment_eur{}",
        columns
            .iter()
            .map(|(_, r)| format!(",{}", r.investment_eur))
            .collect::<String>()
    )?;
    writeln!(
        w,
        "npv_eur{}",
        columns
            .iter()
            .map(|(_, r)| format!(",{}", r.npv_eur))
            .collect::<String>()
    )?;
    writeln!(
        w,
        "lcoe_eur_per_kwh{}",
        columns
            .iter()
            .map(|(_, r)| format!(",{}", fmt_opt(r.lcoe_eur_per_kwh)))
            .collect::<String>()
    )?;
    writeln!(
        w,
        "irr{}",
        columns
            .iter()
            .map(|(_, r)| format!(",{}", fmt_opt(r.irr)))
            .collect::<String>()
    )?;
    writeln!(
        w,
        "spb_years{}",
        columns
            .iter()
            .map(|(_, r)| format!(",{}", fmt_opt(r.spb_years)))
            .collect::<String>()
    )?;
    Ok(())
}

pub fn write_sweep_csv(
    mut w: impl Write,
    results: &[crate::sweep::SweepResult],
) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.case.use_case,
            r.case.vrfb.soc_min_pct,
            r.case.vrfb.soc_max_pct,
            r.case.lib.soc_min_pct,
            r.case.lib.soc_max_pct,
            r.scr,
            r.lcoe_eur_per_kwh,
            r.obu_vrfb,
            r.obu_lib,
            r.npv_eur,
        )?;
    }
    Ok(())
}

/// Streaming trace writer fed from the simulation observer.
pub struct TraceWriter<W: Write> {
    w: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut w: W) -> std::io::Result<Self> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        Ok(Self { w })
    }

    pub fn record(&mut self, obs: &StepObservation) -> std::io::Result<()> {
        let soc = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let r = obs.record;
        writeln!(
            self.w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            obs.year,
            obs.minute_of_year,
            r.pv_w,
            r.load_w,
            r.pv_to_load_w,
            r.pv_to_vrfb_w,
            r.pv_to_lib_w,
            r.vrfb_to_load_w,
            r.lib_to_load_w,
            r.grid_import_w,
            r.grid_export_w,
            r.standby_w,
            r.loss_vrfb_w,
            r.loss_lib_w,
            soc(obs.soc_vrfb),
            soc(obs.soc_lib),
        )
    }

    pub fn into_inner(self) -> W {
        self.w
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text)
}

/// Volatile run metadata, kept apart so reports stay byte-comparable.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestTiming {
    pub started_unix_s: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub kpi_formula_version: String,
    pub econ_formula_version: String,
    pub outputs: Vec<String>,
    pub timing: ManifestTiming,
}

impl Manifest {
    pub fn new(command: &str, config_hash: String, outputs: Vec<PathBuf>) -> Self {
        let started_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            tool: "hessim".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash,
            kpi_formula_version: crate::kpi::KPI_FORMULA_VERSION.to_string(),
            econ_formula_version: crate::economics::ECON_FORMULA_VERSION.to_string(),
            outputs: outputs
                .into_iter()
                .map(|p| p.file_name().map_or_else(
                    || p.display().to_string(),
                    |n| n.to_string_lossy().into_owned(),
                ))
                .collect(),
            timing: ManifestTiming {
                started_unix_s,
                wall_time_s: 0.0,
            },
        }
    }
}

/// FNV-1a 64-bit; hashes the effective config for the manifest.
pub fn fnv1a_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
