//! Seasonal SOC-range sweep: case enumeration, parallel runner, ranking.
//!
//! The grid under study: VRFB minima {5,15,25,35,45} x
//! maxima {55,65,75,85,95}, LIB minima {10,20,30,40} x maxima {50..90},
//! filtered to windows of at least 40 % DOD, giving 19 VRFB x 14 LIB = 266
//! joint cases. Every case runs the fixed-split dispatch over the full horizon
//! with season-dependent SOC bounds and is scored by SCR, LCOE, OBU and NPV.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{AgingParams, BatterySpec, Technology};
use crate::dispatch::{
    simulate_horizon, DispatchError, HorizonInputs, PlantSpec, ScenarioPolicy, SeasonalSocBounds,
};
use crate::economics::{self, CostTable, EconError, Rates, SystemConfig, Tariff};
use crate::kpi::{compute_kpis, KpiError, KpiReport};
use crate::profiles::{MinuteSeries, ScalingPolicy};
use crate::timeline::MinuteWindow;

pub const VRFB_MIN_GRID: [u32; 5] = [5, 15, 25, 35, 45];
pub const VRFB_MAX_GRID: [u32; 5] = [55, 65, 75, 85, 95];
pub const LIB_MIN_GRID: [u32; 4] = [10, 20, 30, 40];
pub const LIB_MAX_GRID: [u32; 5] = [50, 60, 70, 80, 90];

/// Windows narrower than this DOD are not worth the investment and are
/// excluded from the study.
pub const MIN_DOD_PCT: u32 = 40;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Kpi(#[from] KpiError),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error("ranking requires at least one result")]
    EmptyResults,
    #[error("sweep store io: {0}")]
    StoreIo(#[from] std::io::Error),
    #[error("sweep store line {line}: {msg}")]
    StoreParse { line: usize, msg: String },
}

/// One admissible SOC window from the study grid, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocRange {
    pub tech: Technology,
    pub soc_min_pct: u32,
    pub soc_max_pct: u32,
}

impl SocRange {
    pub fn dod_pct(&self) -> u32 {
        self.soc_max_pct - self.soc_min_pct
    }

    pub fn as_fractions(&self) -> (f64, f64) {
        (
            f64::from(self.soc_min_pct) / 100.0,
            f64::from(self.soc_max_pct) / 100.0,
        )
    }
}

/// Which season(s) the case's ranges apply to; the other season keeps the
/// full default window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseCase {
    Uc1AllYearVariable,
    Uc2WinterVariableSummerFixed,
    Uc3WinterFixedSummerVariable,
}

impl UseCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            UseCase::Uc1AllYearVariable => "uc1",
            UseCase::Uc2WinterVariableSummerFixed => "uc2",
            UseCase::Uc3WinterFixedSummerVariable => "uc3",
        }
    }
}

impl std::str::FromStr for UseCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uc1" | "uc1_all_year_variable" => Ok(UseCase::Uc1AllYearVariable),
            "uc2" | "uc2_winter_variable_summer_fixed" => Ok(UseCase::Uc2WinterVariableSummerFixed),
            "uc3" | "uc3_winter_fixed_summer_variable" => Ok(UseCase::Uc3WinterFixedSummerVariable),
            other => Err(format!("unknown use case `{other}`")),
        }
    }
}

impl std::fmt::Display for UseCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One joint VRFB x LIB case of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCase {
    pub index: usize,
    pub use_case: UseCase,
    pub vrfb: SocRange,
    pub lib: SocRange,
}

/// Admissible VRFB windows in grid order.
pub fn admissible_vrfb_ranges() -> Vec<SocRange> {
    let mut out = Vec::new();
    for &lo in &VRFB_MIN_GRID {
        for &hi in &VRFB_MAX_GRID {
            if hi > lo && hi - lo >= MIN_DOD_PCT {
                out.push(SocRange {
                    tech: Technology::Vrfb,
                    soc_min_pct: lo,
                    soc_max_pct: hi,
                });
            }
        }
    }
    out
}

/// Admissible LIB windows in grid order.
pub fn admissible_lib_ranges() -> Vec<SocRange> {
    let mut out = Vec::new();
    for &lo in &LIB_MIN_GRID {
        for &hi in &LIB_MAX_GRID {
            if hi > lo && hi - lo >= MIN_DOD_PCT {
                out.push(SocRange {
                    tech: Technology::Lib,
                    soc_min_pct: lo,
                    soc_max_pct: hi,
                });
            }
        }
    }
    out
}

/// The cartesian product of admissible windows, indexed deterministically.
pub fn enumerate_cases(use_case: UseCase) -> Vec<SweepCase> {
    let mut cases = Vec::new();
    for vrfb in admissible_vrfb_ranges() {
        for lib in admissible_lib_ranges() {
            cases.push(SweepCase {
                index: cases.len(),
                use_case,
                vrfb,
                lib,
            });
        }
    }
    cases
}

/// Everything one sweep run needs besides the case list.
#[derive(Debug, Clone, Copy)]
pub struct SweepInputs<'a> {
    pub pv_base: &'a MinuteSeries,
    pub load_base: &'a MinuteSeries,
    pub scaling: ScalingPolicy,
    pub aging: AgingParams,
    pub years: u32,
    pub offpeak_window: MinuteWindow,
    pub vrfb_spec: BatterySpec,
    pub lib_spec: BatterySpec,
    /// VRFB share of the fixed-split allocation the sweep runs under.
    pub alpha: f64,
    pub tariff: Tariff,
    pub cost: CostTable,
    pub rates: Rates,
}

/// Scores of one simulated case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub case: SweepCase,
    pub scr: f64,
    pub lcoe_eur_per_kwh: f64,
    pub obu_vrfb: f64,
    pub obu_lib: f64,
    pub npv_eur: f64,
    pub kpi: KpiReport,
}

/// The seasonal bounds a case induces under its use case.
pub fn seasonal_bounds_for(case: &SweepCase, vrfb_spec: &BatterySpec, lib_spec: &BatterySpec) -> SeasonalSocBounds {
    let default_vrfb = (vrfb_spec.soc_min, vrfb_spec.soc_max);
    let default_lib = (lib_spec.soc_min, lib_spec.soc_max);
    let case_vrfb = case.vrfb.as_fractions();
    let case_lib = case.lib.as_fractions();
    match case.use_case {
        UseCase::Uc1AllYearVariable => SeasonalSocBounds {
            vrfb_summer: case_vrfb,
            vrfb_winter: case_vrfb,
            lib_summer: case_lib,
            lib_winter: case_lib,
        },
        UseCase::Uc2WinterVariableSummerFixed => SeasonalSocBounds {
            vrfb_summer: default_vrfb,
            vrfb_winter: case_vrfb,
            lib_summer: default_lib,
            lib_winter: case_lib,
        },
        UseCase::Uc3WinterFixedSummerVariable => SeasonalSocBounds {
            vrfb_summer: case_vrfb,
            vrfb_winter: default_vrfb,
            lib_summer: case_lib,
            lib_winter: default_lib,
        },
    }
}

/// Simulates one case over the horizon and scores it.
pub fn run_case(case: &SweepCase, inputs: &SweepInputs) -> Result<SweepResult, SweepError> {
    let policy = ScenarioPolicy::S4SocSweepCase {
        alpha: inputs.alpha,
        seasonal: seasonal_bounds_for(case, &inputs.vrfb_spec, &inputs.lib_spec),
    };
    let plant = PlantSpec::hess(inputs.vrfb_spec, inputs.lib_spec);
    let horizon = HorizonInputs {
        pv_base: inputs.pv_base,
        load_base: inputs.load_base,
        scaling: inputs.scaling,
        aging: inputs.aging,
        years: inputs.years,
        offpeak_window: inputs.offpeak_window,
    };
    let outcome = simulate_horizon(&policy, &plant, &horizon)?;
    let kpi = compute_kpis(&outcome.ledgers)?;
    let rates = Rates {
        horizon_years: inputs.years,
        replacement_year: inputs.rates.replacement_year.min(inputs.years),
        ..inputs.rates
    };
    let econ = economics::evaluate(
        &outcome.ledgers,
        &inputs.tariff,
        &inputs.cost,
        &rates,
        SystemConfig::Hess,
    )?;
    Ok(SweepResult {
        case: *case,
        scr: kpi.scr,
        lcoe_eur_per_kwh: econ.lcoe_eur_per_kwh.unwrap_or(f64::INFINITY),
        obu_vrfb: kpi.obu_vrfb,
        obu_lib: kpi.obu_lib,
        npv_eur: econ.npv_eur,
        kpi,
    })
}

/// Append-only JSONL store so an interrupted sweep resumes where it left.
pub struct SweepStore {
    path: PathBuf,
}

impl SweepStore {
    pub fn new(path: PathBuf) -> Self {
        Self { path }
    }

    pub fn path(&self) -> &std::path::Path {
        &self.path
    }

    /// Results persisted so far, by case index.
    pub fn load(&self) -> Result<HashMap<usize, SweepResult>, SweepError> {
        let mut done = HashMap::new();
        if !self.path.exists() {
            return Ok(done);
        }
        let file = std::fs::File::open(&self.path)?;
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let result: SweepResult =
                serde_json::from_str(&line).map_err(|e| SweepError::StoreParse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            done.insert(result.case.index, result);
        }
        Ok(done)
    }

    fn append(&self, result: &SweepResult) -> Result<(), SweepError> {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let line = serde_json::to_string(result).expect("sweep result serializes");
        writeln!(file, "{line}")?;
        Ok(())
    }

    /// Removes the progress file after the final reports are written.
    pub fn finalize(&self) -> Result<(), SweepError> {
        if self.path.exists() {
            std::fs::remove_file(&self.path)?;
        }
        Ok(())
    }
}

/// Runs all 266 cases of a use case across a worker pool, resuming from the
/// optional store. Results come back ordered by case index regardless of
/// completion order.
pub fn run_sweep(
    use_case: UseCase,
    inputs: &SweepInputs,
    workers: usize,
    store: Option<&SweepStore>,
) -> Result<Vec<SweepResult>, SweepError> {
    let cases = enumerate_cases(use_case);
    let mut done = match store {
        Some(s) => s.load()?,
        None => HashMap::new(),
    };
    let pending: Vec<SweepCase> = cases
        .iter()
        .filter(|c| !done.contains_key(&c.index))
        .copied()
        .collect();

    let store_guard = store.map(Mutex::new);
    let run_pending = || -> Result<Vec<SweepResult>, SweepError> {
        pending
            .par_iter()
            .map(|case| {
                let result = run_case(case, inputs)?;
                if let Some(guard) = &store_guard {
                    guard.lock().expect("store lock").append(&result)?;
                }
                Ok(result)
            })
            .collect()
    };

    let fresh = if workers == 0 {
        run_pending()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(run_pending)?
    };

    for result in fresh {
        done.insert(result.case.index, result);
    }
    let mut results: Vec<SweepResult> = done.into_values().collect();
    results.sort_by_key(|r| r.case.index);
    Ok(results)
}

/// Secondary objective after self-consumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondaryPriority {
    /// Minimize lithium-ion battery use.
    ObuLib,
    /// Minimize levelized cost.
    Lcoe,
}

/// SCR values within this distance tie and fall through to the secondary.
pub const SCR_TIE_TOLERANCE: f64 = 1e-4;
/// Tie width used when collecting "all ranges achieving the best value".
pub const BEST_TIE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct BestEntry {
    pub value: f64,
    /// Every case achieving the best value within [`BEST_TIE_TOLERANCE`].
    pub cases: Vec<SweepCase>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub use_case: UseCase,
    pub priority: Vec<String>,
    /// Lexicographic ranking, best first, by case index.
    pub ranking: Vec<usize>,
    pub best_scr: BestEntry,
    pub best_lcoe: BestEntry,
    pub best_obu_vrfb: BestEntry,
    pub best_obu_lib: BestEntry,
}

fn best_by<F: Fn(&SweepResult) -> f64>(
    results: &[SweepResult],
    metric: F,
    maximize: bool,
) -> BestEntry {
    let mut best = metric(&results[0]);
    for r in results {
        let v = metric(r);
        if (maximize && v > best) || (!maximize && v < best) {
            best = v;
        }
    }
    let cases = results
        .iter()
        .filter(|r| (metric(r) - best).abs() <= BEST_TIE_TOLERANCE)
        .map(|r| r.case)
        .collect();
    BestEntry { value: best, cases }
}

/// Ranks results: maximize SCR, break ties (within 1e-4) by the secondary
/// priority. Stable: equal items keep input order.
pub fn rank(results: &[SweepResult], secondary: SecondaryPriority) -> Result<RankReport, SweepError> {
    if results.is_empty() {
        return Err(SweepError::EmptyResults);
    }
    let secondary_value = |r: &SweepResult| match secondary {
        SecondaryPriority::ObuLib => r.obu_lib,
        SecondaryPriority::Lcoe => r.lcoe_eur_per_kwh,
    };
    // SCR quantized to the tie tolerance keeps the comparator transitive.
    let scr_bucket = |r: &SweepResult| (r.scr / SCR_TIE_TOLERANCE).round() as i64;
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        scr_bucket(rb).cmp(&scr_bucket(ra)).then_with(|| {
            secondary_value(ra)
                .partial_cmp(&secondary_value(rb))
                .expect("finite secondary")
        })
    });

    let use_case = results[0].case.use_case;
    Ok(RankReport {
        use_case,
        priority: vec![
            "max scr".to_string(),
            match secondary {
                SecondaryPriority::ObuLib => "min obu_lib".to_string(),
                SecondaryPriority::Lcoe => "min lcoe".to_string(),
            },
        ],
        ranking: order.iter().map(|&i| results[i].case.index).collect(),
        best_scr: best_by(results, |r| r.scr, true),
        best_lcoe: best_by(results, |r| r.lcoe_eur_per_kwh, false),
        best_obu_vrfb: best_by(results, |r| r.obu_vrfb, false),
        best_obu_lib: best_by(results, |r| r.obu_lib, false),
    })
}
