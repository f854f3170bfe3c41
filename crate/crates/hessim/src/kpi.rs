//! Energy key-performance indicators over the yearly ledgers.
//!
//! Definitions (per year, then arithmetic mean over the horizon):
//! - SCR  = (E_pv - E_export) / E_pv, the PV energy used locally
//! - SSR  = (E_load_total - E_import) / E_load_total
//! - FGU  = E_import / E_load_total, TGU = E_export / E_pv
//! - FBU  = E_discharge_tech / E_load_total, TBU = E_charge_tech / E_pv
//! - OBU  = E_discharge_tech / (365 * usable window capacity): mean
//!   equivalent full discharges per day over the usable SOC window
//! - GRF  = 1 - (E_import + E_export) / (E_load_total + E_pv)
//! - EG   = E_import in kWh
//!
//! E_load_total includes inverter standby. TGU and FGU are stored as exact
//! complements of SCR and SSR so the identities SCR + TGU = 1 and
//! SSR + FGU = 1 hold bit-exactly at every level.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::EnergyLedger;
use crate::timeline::DAYS_PER_YEAR;

pub const KPI_FORMULA_VERSION: &str = "kpi-v1";

#[derive(Debug, Error)]
pub enum KpiError {
    #[error("at least one yearly ledger is required")]
    NoLedgers,
}

/// KPI values of a single year.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct YearKpi {
    pub year: u32,
    pub scr: f64,
    pub ssr: f64,
    pub grf: f64,
    pub fgu: f64,
    pub tgu: f64,
    pub fbu_vrfb: f64,
    pub fbu_lib: f64,
    pub tbu_vrfb: f64,
    pub tbu_lib: f64,
    pub obu_vrfb: f64,
    pub obu_lib: f64,
    pub eg_kwh: f64,
}

/// Horizon KPI report: arithmetic means of the annual values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpiReport {
    pub formula_version: String,
    pub scr: f64,
    pub ssr: f64,
    pub grf: f64,
    pub fgu: f64,
    pub tgu: f64,
    pub fbu_vrfb: f64,
    pub fbu_lib: f64,
    pub tbu_vrfb: f64,
    pub tbu_lib: f64,
    pub obu_vrfb: f64,
    pub obu_lib: f64,
    /// Mean yearly grid import, kWh.
    pub eg_kwh: f64,
    /// Degenerate-input notes (zero-PV or zero-load years).
    pub notes: Vec<String>,
    pub per_year: Vec<YearKpi>,
}

fn year_kpi(ledger: &EnergyLedger, notes: &mut Vec<String>) -> YearKpi {
    let e_pv = ledger.pv_wh;
    let e_load = ledger.load_total_wh();
    let e_import = ledger.grid_import_wh;
    let e_export = ledger.grid_export_wh;

    let (scr, tbu_vrfb, tbu_lib) = if e_pv > 0.0 {
        (
            (e_pv - e_export) / e_pv,
            ledger.vrfb_charge_wh / e_pv,
            ledger.lib_charge_wh / e_pv,
        )
    } else {
        notes.push(format!("year {}: zero PV energy, SCR/TGU/TBU degenerate", ledger.year));
        (1.0, 0.0, 0.0)
    };
    let tgu = 1.0 - scr;

    let (fgu, fbu_vrfb, fbu_lib) = if e_load > 0.0 {
        (
            e_import / e_load,
            ledger.vrfb_discharge_wh / e_load,
            ledger.lib_discharge_wh / e_load,
        )
    } else {
        notes.push(format!("year {}: zero load energy, SSR/FGU/FBU degenerate", ledger.year));
        (0.0, 0.0, 0.0)
    };
    let ssr = 1.0 - fgu;

    let exchange_basis = e_load + e_pv;
    let grf = if exchange_basis > 0.0 {
        1.0 - (e_import + e_export) / exchange_basis
    } else {
        1.0
    };

    let obu = |discharge_wh: f64, usable_mean_wh: f64| {
        if usable_mean_wh > 0.0 {
            discharge_wh / (f64::from(DAYS_PER_YEAR) * usable_mean_wh)
        } else {
            0.0
        }
    };

    YearKpi {
        year: ledger.year,
        scr,
        ssr,
        grf,
        fgu,
        tgu,
        fbu_vrfb,
        fbu_lib,
        tbu_vrfb,
        tbu_lib,
        obu_vrfb: obu(ledger.vrfb_discharge_wh, ledger.vrfb_usable_mean_wh),
        obu_lib: obu(ledger.lib_discharge_wh, ledger.lib_usable_mean_wh),
        eg_kwh: e_import / 1_000.0,
    }
}

/// Computes per-year KPIs and their horizon means.
pub fn compute_kpis(ledgers: &[EnergyLedger]) -> Result<KpiReport, KpiError> {
    if ledgers.is_empty() {
        return Err(KpiError::NoLedgers);
    }
    let mut notes = Vec::new();
    let per_year: Vec<YearKpi> = ledgers.iter().map(|l| year_kpi(l, &mut notes)).collect();
    let n = per_year.len() as f64;
    // Centered mean: exact when every year carries the same value.
    let mean = |select: fn(&YearKpi) -> f64| {
        let first = select(&per_year[0]);
        let deviation: f64 = per_year.iter().map(|y| select(y) - first).sum();
        first + deviation / n
    };

    let scr = mean(|y| y.scr);
    let fgu = mean(|y| y.fgu);
    Ok(KpiReport {
        formula_version: KPI_FORMULA_VERSION.to_string(),
        scr,
        tgu: 1.0 - scr,
        fgu,
        ssr: 1.0 - fgu,
        grf: mean(|y| y.grf),
        fbu_vrfb: mean(|y| y.fbu_vrfb),
        fbu_lib: mean(|y| y.fbu_lib),
        tbu_vrfb: mean(|y| y.tbu_vrfb),
        tbu_lib: mean(|y| y.tbu_lib),
        obu_vrfb: mean(|y| y.obu_vrfb),
        obu_lib: mean(|y| y.obu_lib),
        eg_kwh: mean(|y| y.eg_kwh),
        notes,
        per_year,
    })
}
