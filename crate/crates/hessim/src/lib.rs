//! Deterministic minute-resolution simulator of a grid-connected PV system
//! with a hybrid battery (vanadium redox flow + lithium-ion).
//!
//! The crate models a year as a fixed 365-day, 525,600-minute grid, runs an
//! energy-management loop that allocates the PV surplus/deficit between the
//! two batteries under several dispatch policies, ages the lithium-ion unit
//! with the NREL SAM calendar-fade model, and evaluates the result through
//! energy KPIs (SCR, SSR, GRF, battery-use indicators) and an economic stack
//! (bi-hourly tariff billing, NPV, IRR, LCOE, simple payback).
//!
//! Everything is plain `f64` arithmetic with no hidden state: two runs over
//! the same inputs produce bit-identical ledgers and reports.

pub mod battery;
pub mod cli;
pub mod config;
pub mod dispatch;
pub mod economics;
pub mod kpi;
pub mod profiles;
pub mod report;
pub mod sweep;
pub mod synthetic;
pub mod timeline;

pub use battery::{AgingParams, BatterySpec, BatteryState, Technology};
pub use dispatch::{EnergyLedger, PlantSpec, ScenarioPolicy, StepRecord};
pub use economics::{CostTable, Rates, SystemConfig, Tariff};
pub use kpi::KpiReport;
pub use profiles::{MinuteSeries, ProfileKind, ScalingPolicy};

/// Analysis horizon in years. Battery replacement falls in the final year.
pub const HORIZON_YEARS: u32 = 15;

/// Minutes in the fixed 365-day simulation year.
pub const MINUTES_PER_YEAR: usize = 525_600;

/// Compensated (Kahan) sum; used where a tolerance tighter than naive
/// accumulation over half a million terms is required.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
