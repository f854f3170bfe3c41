//! EMS priority logic, per-scenario power allocation and the minute loop.
//!
//! Priority ladder: PV serves the load (including inverter standby) first;
//! surplus PV charges the batteries; batteries discharge to cover the
//! building load; the grid is the last resort in both directions. Batteries
//! never charge from the grid and never discharge to feed inverter standby,
//! so a plant with zero PV and zero load imports exactly its standby draw
//! and holds its initial SOC.
//!
//! When a commanded battery saturates (power limit or SOC bound), the
//! unserved remainder is offered to the other battery before touching the
//! grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{
    apply_daily_fade, power_limits, step, AgingParams, BatteryError, BatterySpec, BatteryState,
};
use crate::profiles::{scale_to_year, MinuteSeries, ProfileError, ScalingPolicy};
use crate::timeline::{MinuteWindow, Season, DAYS_PER_YEAR, MINUTES_PER_DAY};

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

/// Scenario identifiers for configuration and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    S1FixedSplit,
    S2PsocSplit,
    S3BandSplit,
    S4SocSweepCase,
    S5SingleVrfb,
    S5SingleLib,
}

impl ScenarioId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::S1FixedSplit => "s1_fixed_split",
            ScenarioId::S2PsocSplit => "s2_psoc_split",
            ScenarioId::S3BandSplit => "s3_band_split",
            ScenarioId::S4SocSweepCase => "s4_soc_sweep_case",
            ScenarioId::S5SingleVrfb => "s5_single_vrfb",
            ScenarioId::S5SingleLib => "s5_single_lib",
        }
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s1" | "s1_fixed_split" => Ok(ScenarioId::S1FixedSplit),
            "s2" | "s2_psoc_split" => Ok(ScenarioId::S2PsocSplit),
            "s3" | "s3_band_split" => Ok(ScenarioId::S3BandSplit),
            "s4" | "s4_soc_sweep_case" => Ok(ScenarioId::S4SocSweepCase),
            "s5_vrfb" | "s5_single_vrfb" => Ok(ScenarioId::S5SingleVrfb),
            "s5_lib" | "s5_single_lib" => Ok(ScenarioId::S5SingleLib),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Piecewise-linear share of the HESS command routed to the lithium-ion
/// battery as a function of its SOC, one table per direction.
///
/// Outside the table the nearest endpoint value holds. Defaults steer the
/// pack away from its SOC extremes: full share up to mid-SOC, tapering to
/// zero as the relevant bound approaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaCurve {
    /// (soc, beta) breakpoints for charging, soc strictly increasing.
    pub charge: Vec<(f64, f64)>,
    /// (soc, beta) breakpoints for discharging, soc strictly increasing.
    pub discharge: Vec<(f64, f64)>,
}

impl Default for BetaCurve {
    fn default() -> Self {
        Self {
            charge: vec![(0.5, 1.0), (0.9, 0.0)],
            discharge: vec![(0.1, 0.0), (0.5, 1.0)],
        }
    }
}

impl BetaCurve {
    pub fn validate(&self) -> Result<(), String> {
        for (name, table) in [("charge", &self.charge), ("discharge", &self.discharge)] {
            if table.is_empty() {
                return Err(format!("beta_curve.{name} table is empty"));
            }
            for pair in table.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return Err(format!("beta_curve.{name} soc values must strictly increase"));
                }
            }
            if table.iter().any(|&(s, b)| !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&b)) {
                return Err(format!("beta_curve.{name} entries must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Lithium-ion share in [0, 1] for the given SOC and command direction.
    pub fn beta(&self, soc: f64, charging: bool) -> f64 {
        let table = if charging { &self.charge } else { &self.discharge };
        piecewise_linear(table, soc)
    }
}

fn piecewise_linear(table: &[(f64, f64)], x: f64) -> f64 {
    if x <= table[0].0 {
        return table[0].1;
    }
    if x >= table[table.len() - 1].0 {
        return table[table.len() - 1].1;
    }
    for pair in table.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    table[table.len() - 1].1
}

/// Per-season SOC bounds for the seasonal scenario, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalSocBounds {
    pub vrfb_summer: (f64, f64),
    pub vrfb_winter: (f64, f64),
    pub lib_summer: (f64, f64),
    pub lib_winter: (f64, f64),
}

impl SeasonalSocBounds {
    /// Full default windows in both seasons (VRFB 5-95 %, LIB 10-90 %).
    pub fn full_default() -> Self {
        Self {
            vrfb_summer: (0.05, 0.95),
            vrfb_winter: (0.05, 0.95),
            lib_summer: (0.10, 0.90),
            lib_winter: (0.10, 0.90),
        }
    }

    pub fn for_season(&self, season: Season) -> ((f64, f64), (f64, f64)) {
        match season {
            Season::Summer => (self.vrfb_summer, self.lib_summer),
            Season::Winter => (self.vrfb_winter, self.lib_winter),
        }
    }
}

/// The dispatch/allocation rule with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioPolicy {
    /// Fixed split of the HESS command: alpha to the VRFB, 1-alpha to the
    /// lithium-ion battery.
    S1FixedSplit { alpha: f64 },
    /// SOC-dependent lithium-ion share from a [`BetaCurve`]; the VRFB takes
    /// the complement (alpha = 1 - beta at every step).
    S2PsocSplit { curve: BetaCurve },
    /// Peak-shaving band: the lithium-ion battery absorbs everything within
    /// +-band_w, the VRFB takes the remainder.
    S3BandSplit { band_w: f64 },
    /// Fixed split (as scenario 1) with season-dependent SOC windows.
    S4SocSweepCase {
        alpha: f64,
        seasonal: SeasonalSocBounds,
    },
    /// Single-battery baselines.
    S5SingleVrfb,
    S5SingleLib,
}

impl ScenarioPolicy {
    pub fn id(&self) -> ScenarioId {
        match self {
            ScenarioPolicy::S1FixedSplit { .. } => ScenarioId::S1FixedSplit,
            ScenarioPolicy::S2PsocSplit { .. } => ScenarioId::S2PsocSplit,
            ScenarioPolicy::S3BandSplit { .. } => ScenarioId::S3BandSplit,
            ScenarioPolicy::S4SocSweepCase { .. } => ScenarioId::S4SocSweepCase,
            ScenarioPolicy::S5SingleVrfb => ScenarioId::S5SingleVrfb,
            ScenarioPolicy::S5SingleLib => ScenarioId::S5SingleLib,
        }
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        match self {
            ScenarioPolicy::S1FixedSplit { alpha }
            | ScenarioPolicy::S4SocSweepCase { alpha, .. } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(DispatchError::InvalidPolicy(format!(
                        "alpha {alpha} outside [0, 1]"
                    )));
                }
            }
            ScenarioPolicy::S2PsocSplit { curve } => {
                curve.validate().map_err(DispatchError::InvalidPolicy)?;
            }
            ScenarioPolicy::S3BandSplit { band_w } => {
                if band_w.is_nan() || *band_w <= 0.0 {
                    return Err(DispatchError::InvalidPolicy(format!(
                        "band_w {band_w} must be > 0"
                    )));
                }
            }
            ScenarioPolicy::S5SingleVrfb | ScenarioPolicy::S5SingleLib => {}
        }
        Ok(())
    }

    /// Seasonal SOC bounds if this policy varies them, (vrfb, lib).
    pub fn seasonal_bounds(&self, season: Season) -> Option<((f64, f64), (f64, f64))> {
        match self {
            ScenarioPolicy::S4SocSweepCase { seasonal, .. } => Some(seasonal.for_season(season)),
            _ => None,
        }
    }
}

/// Splits `p` into (vrfb, lib) shares with vrfb + lib == p exactly.
///
/// The larger share is the one computed by complement: its operand sits in
/// [p/2, p], where the subtraction is exact (Sterbenz), so the pair always
/// recombines to `p` bit-exactly.
fn split_exact(p: f64, beta_lib: f64) -> (f64, f64) {
    if beta_lib >= 0.5 {
        let p_lib = beta_lib * p;
        (p - p_lib, p_lib)
    } else {
        let p_vrfb = (1.0 - beta_lib) * p;
        (p_vrfb, p - p_vrfb)
    }
}

/// Splits the HESS power target between the two batteries.
///
/// The pair always sums to `p_target` exactly (pre-saturation completeness);
/// both commands carry the sign of the target.
pub fn allocate(policy: &ScenarioPolicy, p_target: f64, lib_soc: f64) -> (f64, f64) {
    if p_target == 0.0 {
        return (0.0, 0.0);
    }
    match policy {
        ScenarioPolicy::S1FixedSplit { alpha }
        | ScenarioPolicy::S4SocSweepCase { alpha, .. } => {
            // The default 0.75/0.25 split: 0.25*p is exact (power-of-two
            // scale), and the complement provably recombines to p.
            let p_lib = (1.0 - alpha) * p_target;
            (p_target - p_lib, p_lib)
        }
        ScenarioPolicy::S2PsocSplit { curve } => {
            let beta = curve.beta(lib_soc, p_target > 0.0);
            split_exact(p_target, beta)
        }
        ScenarioPolicy::S3BandSplit { band_w } => {
            let p_lib = p_target.clamp(-band_w, *band_w);
            (p_target - p_lib, p_lib)
        }
        ScenarioPolicy::S5SingleVrfb => (p_target, 0.0),
        ScenarioPolicy::S5SingleLib => (0.0, p_target),
    }
}

/// Signed PV/load mismatch: positive = surplus available for charging,
/// negative = deficit the batteries should cover.
pub fn ems_target(pv_w: f64, load_w: f64) -> f64 {
    pv_w - load_w
}

/// One battery unit: its ratings plus live state.
#[derive(Debug, Clone, Copy)]
pub struct Unit {
    pub spec: BatterySpec,
    pub state: BatteryState,
}

/// Which batteries are installed; `None` means the technology is absent
/// (its standby, flows and costs all disappear).
#[derive(Debug, Clone, Copy)]
pub struct PlantSpec {
    pub vrfb: Option<BatterySpec>,
    pub lib: Option<BatterySpec>,
}

impl PlantSpec {
    pub fn hess(vrfb: BatterySpec, lib: BatterySpec) -> Self {
        Self {
            vrfb: Some(vrfb),
            lib: Some(lib),
        }
    }

    /// Installs the batteries a scenario calls for.
    pub fn for_scenario(id: ScenarioId, vrfb: BatterySpec, lib: BatterySpec) -> Self {
        match id {
            ScenarioId::S5SingleVrfb => Self {
                vrfb: Some(vrfb),
                lib: None,
            },
            ScenarioId::S5SingleLib => Self {
                vrfb: None,
                lib: Some(lib),
            },
            _ => Self::hess(vrfb, lib),
        }
    }

    pub fn validate(&self) -> Result<(), BatteryError> {
        if let Some(s) = &self.vrfb {
            s.validate()?;
        }
        if let Some(s) = &self.lib {
            s.validate()?;
        }
        Ok(())
    }
}

/// Live plant: the installed units with their states.
#[derive(Debug, Clone, Copy)]
pub struct Plant {
    pub vrfb: Option<Unit>,
    pub lib: Option<Unit>,
}

impl Plant {
    pub fn new(spec: &PlantSpec, aging: &AgingParams) -> Self {
        let build = |s: &BatterySpec| Unit {
            spec: *s,
            state: BatteryState::new(s, aging),
        };
        Self {
            vrfb: spec.vrfb.as_ref().map(build),
            lib: spec.lib.as_ref().map(build),
        }
    }

    pub fn standby_w(&self) -> f64 {
        self.vrfb.map_or(0.0, |u| u.spec.standby_power_w)
            + self.lib.map_or(0.0, |u| u.spec.standby_power_w)
    }
}

/// All power flows of one simulated minute, in watts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepRecord {
    pub pv_w: f64,
    pub load_w: f64,
    pub pv_to_load_w: f64,
    pub pv_to_vrfb_w: f64,
    pub pv_to_lib_w: f64,
    pub vrfb_to_load_w: f64,
    pub lib_to_load_w: f64,
    pub grid_import_w: f64,
    pub grid_export_w: f64,
    pub standby_w: f64,
    pub loss_vrfb_w: f64,
    pub loss_lib_w: f64,
}

impl StepRecord {
    /// Residual of the per-step AC balance; zero up to FP rounding.
    pub fn balance_residual_w(&self) -> f64 {
        let supplied = self.pv_w + self.grid_import_w + self.vrfb_to_load_w + self.lib_to_load_w;
        let consumed = self.load_w
            + self.standby_w
            + self.grid_export_w
            + self.pv_to_vrfb_w
            + self.pv_to_lib_w;
        supplied - consumed
    }
}

/// Per-year energy totals in Wh, plus the tariff-window splits and the
/// capacity means the KPI layer needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub year: u32,
    pub pv_wh: f64,
    pub load_wh: f64,
    pub standby_wh: f64,
    pub pv_to_load_wh: f64,
    pub vrfb_charge_wh: f64,
    pub vrfb_discharge_wh: f64,
    pub lib_charge_wh: f64,
    pub lib_discharge_wh: f64,
    pub grid_import_wh: f64,
    pub grid_export_wh: f64,
    pub loss_vrfb_wh: f64,
    pub loss_lib_wh: f64,
    /// Import split by the tariff window the run was billed against.
    pub grid_import_peak_wh: f64,
    pub grid_import_offpeak_wh: f64,
    /// Building-load split by the same window (counterfactual billing).
    pub load_peak_wh: f64,
    pub load_offpeak_wh: f64,
    /// Day-mean usable energy window per technology, Wh.
    pub vrfb_usable_mean_wh: f64,
    pub lib_usable_mean_wh: f64,
    /// The off-peak window the splits were accumulated under.
    pub offpeak_window: MinuteWindow,
}

impl EnergyLedger {
    fn new(year: u32, offpeak_window: MinuteWindow) -> Self {
        Self {
            year,
            pv_wh: 0.0,
            load_wh: 0.0,
            standby_wh: 0.0,
            pv_to_load_wh: 0.0,
            vrfb_charge_wh: 0.0,
            vrfb_discharge_wh: 0.0,
            lib_charge_wh: 0.0,
            lib_discharge_wh: 0.0,
            grid_import_wh: 0.0,
            grid_export_wh: 0.0,
            loss_vrfb_wh: 0.0,
            loss_lib_wh: 0.0,
            grid_import_peak_wh: 0.0,
            grid_import_offpeak_wh: 0.0,
            load_peak_wh: 0.0,
            load_offpeak_wh: 0.0,
            vrfb_usable_mean_wh: 0.0,
            lib_usable_mean_wh: 0.0,
            offpeak_window,
        }
    }

    fn accumulate(&mut self, rec: &StepRecord, offpeak: bool) {
        const WH: f64 = 1.0 / 60.0;
        self.pv_wh += rec.pv_w * WH;
        self.load_wh += rec.load_w * WH;
        self.standby_wh += rec.standby_w * WH;
        self.pv_to_load_wh += rec.pv_to_load_w * WH;
        self.vrfb_charge_wh += rec.pv_to_vrfb_w * WH;
        self.vrfb_discharge_wh += rec.vrfb_to_load_w * WH;
        self.lib_charge_wh += rec.pv_to_lib_w * WH;
        self.lib_discharge_wh += rec.lib_to_load_w * WH;
        self.grid_import_wh += rec.grid_import_w * WH;
        self.grid_export_wh += rec.grid_export_w * WH;
        self.loss_vrfb_wh += rec.loss_vrfb_w * WH;
        self.loss_lib_wh += rec.loss_lib_w * WH;
        if offpeak {
            self.grid_import_offpeak_wh += rec.grid_import_w * WH;
            self.load_offpeak_wh += rec.load_w * WH;
        } else {
            self.grid_import_peak_wh += rec.grid_import_w * WH;
            self.load_peak_wh += rec.load_w * WH;
        }
    }

    /// Building load plus inverter standby, Wh.
    pub fn load_total_wh(&self) -> f64 {
        self.load_wh + self.standby_wh
    }

    pub fn loss_total_wh(&self) -> f64 {
        self.loss_vrfb_wh + self.loss_lib_wh
    }

    /// Energy the system itself delivered to the load (PV direct plus
    /// battery discharge), Wh; the LCOE denominator basis.
    pub fn delivered_wh(&self) -> f64 {
        self.pv_to_load_wh + self.vrfb_discharge_wh + self.lib_discharge_wh
    }
}

/// Executes one minute: PV first to the load, allocation of the remainder,
/// spill pass, then the grid.
pub fn dispatch_step(
    policy: &ScenarioPolicy,
    plant: &mut Plant,
    pv_w: f64,
    load_w: f64,
) -> Result<StepRecord, DispatchError> {
    let standby_w = plant.standby_w();
    let load_total_w = load_w + standby_w;

    // Surplus charging competes after standby; discharge covers only the
    // building load (standby is never battery-fed).
    let surplus = ems_target(pv_w, load_total_w);
    let p_target = if surplus > 0.0 {
        surplus
    } else {
        ems_target(pv_w, load_w).min(0.0)
    };

    let lib_soc = plant.lib.as_ref().map_or(0.5, |u| u.state.soc);
    let (cmd_vrfb, cmd_lib) = allocate(policy, p_target, lib_soc);

    let limits = |unit: &Option<Unit>| {
        unit.as_ref()
            .map_or((0.0, 0.0), |u| power_limits(&u.spec, &u.state))
    };
    let (vrfb_chg_avail, vrfb_dis_avail) = limits(&plant.vrfb);
    let (lib_chg_avail, lib_dis_avail) = limits(&plant.lib);

    let mut final_vrfb = cmd_vrfb.clamp(-vrfb_dis_avail, vrfb_chg_avail);
    let mut final_lib = cmd_lib.clamp(-lib_dis_avail, lib_chg_avail);

    // Spill pass: offer what the commanded battery could not take to the
    // other one, still inside this minute's limits.
    let unserved = p_target - final_vrfb - final_lib;
    if unserved > 0.0 {
        let extra_vrfb = unserved.min(vrfb_chg_avail - final_vrfb).max(0.0);
        final_vrfb += extra_vrfb;
        let extra_lib = (unserved - extra_vrfb).min(lib_chg_avail - final_lib).max(0.0);
        final_lib += extra_lib;
    } else if unserved < 0.0 {
        let wanted = -unserved;
        let extra_vrfb = wanted.min(vrfb_dis_avail + final_vrfb).max(0.0);
        final_vrfb -= extra_vrfb;
        let extra_lib = (wanted - extra_vrfb).min(lib_dis_avail + final_lib).max(0.0);
        final_lib -= extra_lib;
    }

    let mut loss_vrfb_w = 0.0;
    let mut loss_lib_w = 0.0;
    let mut actual_vrfb = 0.0;
    let mut actual_lib = 0.0;
    if let Some(unit) = plant.vrfb.as_mut() {
        let (next, p, loss_wh) = step(&unit.spec, &unit.state, final_vrfb, 1.0)?;
        unit.state = next;
        actual_vrfb = p;
        loss_vrfb_w = loss_wh * 60.0;
    }
    if let Some(unit) = plant.lib.as_mut() {
        let (next, p, loss_wh) = step(&unit.spec, &unit.state, final_lib, 1.0)?;
        unit.state = next;
        actual_lib = p;
        loss_lib_w = loss_wh * 60.0;
    }

    let pv_to_load_w = pv_w.min(load_total_w);
    let pv_to_vrfb_w = actual_vrfb.max(0.0);
    let pv_to_lib_w = actual_lib.max(0.0);
    let vrfb_to_load_w = (-actual_vrfb).max(0.0);
    let lib_to_load_w = (-actual_lib).max(0.0);
    let grid_export_w = (pv_w - pv_to_load_w - pv_to_vrfb_w - pv_to_lib_w).max(0.0);
    let grid_import_w =
        (load_total_w - pv_to_load_w - vrfb_to_load_w - lib_to_load_w).max(0.0);

    Ok(StepRecord {
        pv_w,
        load_w,
        pv_to_load_w,
        pv_to_vrfb_w,
        pv_to_lib_w,
        vrfb_to_load_w,
        lib_to_load_w,
        grid_import_w,
        grid_export_w,
        standby_w,
        loss_vrfb_w,
        loss_lib_w,
    })
}

/// Everything a horizon run needs besides the policy and the plant.
#[derive(Debug, Clone, Copy)]
pub struct HorizonInputs<'a> {
    pub pv_base: &'a MinuteSeries,
    pub load_base: &'a MinuteSeries,
    pub scaling: ScalingPolicy,
    pub aging: AgingParams,
    pub years: u32,
    pub offpeak_window: MinuteWindow,
}

/// Ledgers in year order plus the plant as it ended.
#[derive(Debug, Clone)]
pub struct HorizonResult {
    pub ledgers: Vec<EnergyLedger>,
    pub plant: Plant,
}

/// Step-level view handed to an observer (trace emission, audits).
pub struct StepObservation<'a> {
    pub year: u32,
    pub minute_of_year: u32,
    pub record: &'a StepRecord,
    pub soc_vrfb: Option<f64>,
    pub soc_lib: Option<f64>,
}

/// Runs the full multi-year simulation; bit-exact for identical inputs.
pub fn simulate_horizon(
    policy: &ScenarioPolicy,
    plant_spec: &PlantSpec,
    inputs: &HorizonInputs,
) -> Result<HorizonResult, DispatchError> {
    simulate_horizon_with(policy, plant_spec, inputs, |_| {})
}

/// [`simulate_horizon`] with a per-step observer callback.
pub fn simulate_horizon_with(
    policy: &ScenarioPolicy,
    plant_spec: &PlantSpec,
    inputs: &HorizonInputs,
    mut observer: impl FnMut(&StepObservation),
) -> Result<HorizonResult, DispatchError> {
    policy.validate()?;
    plant_spec.validate()?;
    let mut plant = Plant::new(plant_spec, &inputs.aging);
    let mut ledgers = Vec::with_capacity(inputs.years as usize);

    for year in 1..=inputs.years {
        let pv = scale_to_year(inputs.pv_base, &inputs.scaling, year)?;
        let load = scale_to_year(inputs.load_base, &inputs.scaling, year)?;
        let pv_values = pv.values();
        let load_values = load.values();
        let mut ledger = EnergyLedger::new(year, inputs.offpeak_window);
        let mut vrfb_usable_sum = 0.0;
        let mut lib_usable_sum = 0.0;

        for day in 0..DAYS_PER_YEAR {
            if let Some((vrfb_bounds, lib_bounds)) = policy.seasonal_bounds(Season::of_day(day)) {
                if let Some(unit) = plant.vrfb.as_mut() {
                    unit.state.set_active_bounds(vrfb_bounds.0, vrfb_bounds.1);
                }
                if let Some(unit) = plant.lib.as_mut() {
                    unit.state.set_active_bounds(lib_bounds.0, lib_bounds.1);
                }
            }

            let day_start = day * MINUTES_PER_DAY;
            for minute_of_day in 0..MINUTES_PER_DAY {
                let minute = (day_start + minute_of_day) as usize;
                let record =
                    dispatch_step(policy, &mut plant, pv_values[minute], load_values[minute])?;
                ledger.accumulate(&record, inputs.offpeak_window.contains(minute_of_day));
                observer(&StepObservation {
                    year,
                    minute_of_year: minute as u32,
                    record: &record,
                    soc_vrfb: plant.vrfb.as_ref().map(|u| u.state.soc),
                    soc_lib: plant.lib.as_ref().map(|u| u.state.soc),
                });
            }

            if let Some(unit) = plant.vrfb.as_mut() {
                unit.state = apply_daily_fade(&unit.spec, &unit.state, &inputs.aging)?;
                vrfb_usable_sum += unit.state.usable_capacity_wh();
            }
            if let Some(unit) = plant.lib.as_mut() {
                unit.state = apply_daily_fade(&unit.spec, &unit.state, &inputs.aging)?;
                lib_usable_sum += unit.state.usable_capacity_wh();
            }
        }

        ledger.vrfb_usable_mean_wh = vrfb_usable_sum / f64::from(DAYS_PER_YEAR);
        ledger.lib_usable_mean_wh = lib_usable_sum / f64::from(DAYS_PER_YEAR);
        ledgers.push(ledger);
    }

    Ok(HorizonResult { ledgers, plant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::ProfileKind;
    use crate::MINUTES_PER_YEAR;
    use proptest::prelude::*;

    fn flat_series(w: f64, kind: ProfileKind) -> MinuteSeries {
        MinuteSeries::new(vec![w; MINUTES_PER_YEAR], kind).unwrap()
    }

    fn hess_plant() -> Plant {
        Plant::new(
            &PlantSpec::hess(BatterySpec::default_vrfb(), BatterySpec::default_lib()),
            &AgingParams::default(),
        )
    }

    #[test]
    fn ems_target_sign_convention() {
        assert_eq!(ems_target(3_000.0, 3_000.0), 0.0);
        assert_eq!(ems_target(5_000.0, 1_200.0), 3_800.0);
        assert_eq!(ems_target(0.0, 2_500.0), -2_500.0);
    }

    #[test]
    fn s1_splits_75_25() {
        let policy = ScenarioPolicy::S1FixedSplit { alpha: 0.75 };
        let (v, l) = allocate(&policy, 4_000.0, 0.5);
        assert_eq!((v, l), (3_000.0, 1_000.0));
    }

    #[test]
    fn s3_band_routing() {
        let policy = ScenarioPolicy::S3BandSplit { band_w: 1_000.0 };
        assert_eq!(allocate(&policy, -800.0, 0.5), (0.0, -800.0));
        assert_eq!(allocate(&policy, 4_200.0, 0.5), (3_200.0, 1_000.0));
        assert_eq!(allocate(&policy, -3_500.0, 0.5), (-2_500.0, -1_000.0));
    }

    #[test]
    fn s2_beta_curve_defaults() {
        let curve = BetaCurve::default();
        assert_eq!(curve.beta(0.3, true), 1.0);
        assert_eq!(curve.beta(0.5, true), 1.0);
        assert!((curve.beta(0.7, true) - 0.5).abs() < 1e-12);
        assert_eq!(curve.beta(0.95, true), 0.0);
        assert_eq!(curve.beta(0.7, false), 1.0);
        assert!((curve.beta(0.3, false) - 0.5).abs() < 1e-12);
        assert_eq!(curve.beta(0.05, false), 0.0);
    }

    #[test]
    fn single_battery_policies() {
        let (v, l) = allocate(&ScenarioPolicy::S5SingleVrfb, 2_000.0, 0.5);
        assert_eq!((v, l), (2_000.0, 0.0));
        let (v, l) = allocate(&ScenarioPolicy::S5SingleLib, -2_000.0, 0.5);
        assert_eq!((v, l), (0.0, -2_000.0));
    }

    #[test]
    fn idle_plant_imports_exactly_standby() {
        let policy = ScenarioPolicy::S1FixedSplit { alpha: 0.75 };
        let mut plant = hess_plant();
        let rec = dispatch_step(&policy, &mut plant, 0.0, 0.0).unwrap();
        assert_eq!(rec.grid_import_w, 35.0);
        assert_eq!(rec.grid_export_w, 0.0);
        assert_eq!(rec.vrfb_to_load_w, 0.0);
        assert_eq!(rec.lib_to_load_w, 0.0);
        assert_eq!(plant.vrfb.unwrap().state.soc, 0.5);
        assert_eq!(plant.lib.unwrap().state.soc, 0.5);
    }

    #[test]
    fn saturated_vrfb_spills_to_lib_then_grid() {
        let policy = ScenarioPolicy::S1FixedSplit { alpha: 0.75 };
        let mut plant = hess_plant();
        plant.vrfb.as_mut().unwrap().state.soc = 0.95; // full
        let rec = dispatch_step(&policy, &mut plant, 4_000.0, 0.0).unwrap();
        assert_eq!(rec.pv_to_vrfb_w, 0.0);
        // Surplus after standby: 4000 - 35 = 3965 -> LIB takes its 3300 W
        // inverter limit, the rest is exported.
        assert_eq!(rec.pv_to_lib_w, 3_300.0);
        assert!((rec.grid_export_w - (3_965.0 - 3_300.0)).abs() < 1e-9);
        assert_eq!(rec.grid_import_w, 0.0);
    }

    #[test]
    fn single_lib_deficit_hits_inverter_limit() {
        let policy = ScenarioPolicy::S5SingleLib;
        let spec = PlantSpec::for_scenario(ScenarioId::S5SingleLib, BatterySpec::default_vrfb(), BatterySpec::default_lib());
        let mut plant = Plant::new(&spec, &AgingParams::default());
        let rec = dispatch_step(&policy, &mut plant, 0.0, 5_000.0).unwrap();
        assert_eq!(rec.lib_to_load_w, 3_300.0);
        assert_eq!(rec.vrfb_to_load_w, 0.0);
        // Grid covers the 1700 W residual plus the 5 W standby.
        assert!((rec.grid_import_w - 1_705.0).abs() < 1e-9);
        assert_eq!(rec.standby_w, 5.0);
    }

    #[test]
    fn batteries_never_charge_beyond_pv_surplus() {
        let policy = ScenarioPolicy::S1FixedSplit { alpha: 0.75 };
        let mut plant = hess_plant();
        for (pv, load) in [(6_000.0, 1_000.0), (2_000.0, 1_990.0), (400.0, 395.0)] {
            let rec = dispatch_step(&policy, &mut plant, pv, load).unwrap();
            assert!(rec.pv_to_vrfb_w + rec.pv_to_lib_w <= pv + 1e-9);
        }
    }

    #[test]
    fn standby_year_leaves_soc_untouched() {
        let pv = flat_series(0.0, ProfileKind::Pv);
        let load = flat_series(0.0, ProfileKind::Load);
        let inputs = HorizonInputs {
            pv_base: &pv,
            load_base: &load,
            scaling: ScalingPolicy::default(),
            aging: AgingParams::default(),
            years: 1,
            offpeak_window: MinuteWindow::default_offpeak(),
        };
        let policy = ScenarioPolicy::S1FixedSplit { alpha: 0.75 };
        let spec = PlantSpec::hess(BatterySpec::default_vrfb(), BatterySpec::default_lib());
        let result = simulate_horizon(&policy, &spec, &inputs).unwrap();
        let ledger = &result.ledgers[0];
        // 35 W for 8760 h = 306.6 kWh, all imported.
        assert!((ledger.grid_import_wh - 306_600.0).abs() < 1e-6);
        assert!((ledger.standby_wh - 306_600.0).abs() < 1e-6);
        assert_eq!(ledger.grid_export_wh, 0.0);
        assert_eq!(ledger.vrfb_discharge_wh, 0.0);
        assert_eq!(ledger.lib_discharge_wh, 0.0);
        assert_eq!(result.plant.vrfb.unwrap().state.soc, 0.5);
        assert_eq!(result.plant.lib.unwrap().state.soc, 0.5);
    }

    #[test]
    fn import_export_never_simultaneous_and_balance_holds() {
        let policy = ScenarioPolicy::S3BandSplit { band_w: 1_000.0 };
        let mut plant = hess_plant();
        // Deterministic pseudo-random PV/load sweep.
        let mut seed: u64 = 42;
        let mut rand = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20_000 {
            let pv = rand() * 10_000.0;
            let load = rand() * 6_000.0;
            let rec = dispatch_step(&policy, &mut plant, pv, load).unwrap();
            assert_eq!(rec.grid_import_w * rec.grid_export_w, 0.0);
            assert!(rec.pv_to_vrfb_w * rec.vrfb_to_load_w == 0.0);
            assert!(rec.pv_to_lib_w * rec.lib_to_load_w == 0.0);
            let scale = rec.pv_w.abs().max(rec.load_w.abs()).max(1.0);
            assert!(
                rec.balance_residual_w().abs() <= 1e-9 * scale,
                "residual {}",
                rec.balance_residual_w()
            );
        }
    }

    #[test]
    fn s3_band_keeps_vrfb_idle_inside_band() {
        let policy = ScenarioPolicy::S3BandSplit { band_w: 1_000.0 };
        let mut plant = hess_plant();
        for load in [100.0, 400.0, 900.0] {
            let rec = dispatch_step(&policy, &mut plant, 0.0, load).unwrap();
            assert_eq!(rec.vrfb_to_load_w, 0.0, "load {load}");
            assert!(rec.lib_to_load_w > 0.0);
        }
    }

    #[test]
    fn horizon_is_deterministic() {
        let pv = flat_series(2_000.0, ProfileKind::Pv);
        let load = flat_series(1_500.0, ProfileKind::Load);
        let inputs = HorizonInputs {
            pv_base: &pv,
            load_base: &load,
            scaling: ScalingPolicy::default(),
            aging: AgingParams::default(),
            years: 2,
            offpeak_window: MinuteWindow::default_offpeak(),
        };
        let policy = ScenarioPolicy::S2PsocSplit {
            curve: BetaCurve::default(),
        };
        let spec = PlantSpec::hess(BatterySpec::default_vrfb(), BatterySpec::default_lib());
        let a = simulate_horizon(&policy, &spec, &inputs).unwrap();
        let b = simulate_horizon(&policy, &spec, &inputs).unwrap();
        assert_eq!(a.ledgers, b.ledgers);
    }

    #[test]
    fn single_battery_scenarios_zero_the_other_ledger_columns() {
        let pv = flat_series(3_000.0, ProfileKind::Pv);
        let load = flat_series(1_000.0, ProfileKind::Load);
        let inputs = HorizonInputs {
            pv_base: &pv,
            load_base: &load,
            scaling: ScalingPolicy::default(),
            aging: AgingParams::default(),
            years: 1,
            offpeak_window: MinuteWindow::default_offpeak(),
        };
        let vrfb_only = PlantSpec::for_scenario(
            ScenarioId::S5SingleVrfb,
            BatterySpec::default_vrfb(),
            BatterySpec::default_lib(),
        );
        let result =
            simulate_horizon(&ScenarioPolicy::S5SingleVrfb, &vrfb_only, &inputs).unwrap();
        let ledger = &result.ledgers[0];
        assert_eq!(ledger.lib_charge_wh, 0.0);
        assert_eq!(ledger.lib_discharge_wh, 0.0);
        assert!(ledger.vrfb_charge_wh > 0.0);

        let hess = PlantSpec::hess(BatterySpec::default_vrfb(), BatterySpec::default_lib());
        let s1 = simulate_horizon(
            &ScenarioPolicy::S1FixedSplit { alpha: 0.75 },
            &hess,
            &inputs,
        )
        .unwrap();
        assert!(s1.ledgers[0].lib_charge_wh > 0.0);
    }

    #[test]
    fn seasonal_bounds_follow_the_calendar() {
        let seasonal = SeasonalSocBounds {
            vrfb_summer: (0.25, 0.75),
            vrfb_winter: (0.05, 0.95),
            lib_summer: (0.40, 0.80),
            lib_winter: (0.10, 0.90),
        };
        let policy = ScenarioPolicy::S4SocSweepCase {
            alpha: 0.75,
            seasonal,
        };
        assert_eq!(
            policy.seasonal_bounds(Season::Winter),
            Some(((0.05, 0.95), (0.10, 0.90)))
        );
        assert_eq!(
            policy.seasonal_bounds(Season::Summer),
            Some(((0.25, 0.75), (0.40, 0.80)))
        );
        assert_eq!(
            ScenarioPolicy::S1FixedSplit { alpha: 0.75 }.seasonal_bounds(Season::Summer),
            None
        );
    }

    #[test]
    fn scenario_id_round_trip() {
        for id in [
            ScenarioId::S1FixedSplit,
            ScenarioId::S2PsocSplit,
            ScenarioId::S3BandSplit,
            ScenarioId::S4SocSweepCase,
            ScenarioId::S5SingleVrfb,
            ScenarioId::S5SingleLib,
        ] {
            assert_eq!(id.as_str().parse::<ScenarioId>().unwrap(), id);
        }
        assert_eq!("s1".parse::<ScenarioId>().unwrap(), ScenarioId::S1FixedSplit);
        assert!("s9".parse::<ScenarioId>().is_err());
    }

    proptest! {
        #[test]
        fn allocation_completeness_pre_saturation(
            p_target in -20_000.0f64..20_000.0,
            lib_soc in 0.0f64..=1.0,
        ) {
            let policies = [
                ScenarioPolicy::S1FixedSplit { alpha: 0.75 },
                ScenarioPolicy::S2PsocSplit { curve: BetaCurve::default() },
                ScenarioPolicy::S3BandSplit { band_w: 1_000.0 },
            ];
            for policy in &policies {
                let (v, l) = allocate(policy, p_target, lib_soc);
                prop_assert_eq!(v + l, p_target, "{:?}", policy.id());
                // Commands carry the target's sign.
                prop_assert!(v * p_target >= 0.0);
                prop_assert!(l * p_target >= 0.0);
            }
        }

        #[test]
        fn s1_split_is_exactly_75_25(p_target in -20_000.0f64..20_000.0) {
            let policy = ScenarioPolicy::S1FixedSplit { alpha: 0.75 };
            let (v, l) = allocate(&policy, p_target, 0.5);
            prop_assert_eq!(l, 0.25 * p_target);
            prop_assert_eq!(v, 0.75 * p_target);
        }

        #[test]
        fn s2_alpha_beta_sum_to_one(lib_soc in 0.0f64..=1.0, charging in any::<bool>()) {
            let curve = BetaCurve::default();
            let beta = curve.beta(lib_soc, charging);
            prop_assert!((0.0..=1.0).contains(&beta));
            let alpha = 1.0 - beta;
            prop_assert_eq!(alpha + beta, 1.0);
        }

        #[test]
        fn s3_inside_band_goes_to_lib(p_target in -1_000.0f64..=1_000.0) {
            let policy = ScenarioPolicy::S3BandSplit { band_w: 1_000.0 };
            let (v, l) = allocate(&policy, p_target, 0.5);
            prop_assert_eq!(v, 0.0);
            prop_assert_eq!(l, p_target);
        }
    }
}
