//! Energy-domain battery models for the VRFB and the lithium-ion unit.
//!
//! Both technologies share the same SOC dynamics: AC-side commands are
//! clamped to SOC-tapered power limits, one-way efficiencies split the
//! conversion loss between charge and discharge, and the inverter standby
//! draw is booked by the dispatch layer as a house load (not here).
//!
//! The lithium-ion unit additionally ages with the NREL SAM calendar-fade
//! model: `q = q0 - kcal * sqrt(t_days)` with the stress factor
//! `kcal = a * exp(b*(1/T - 1/296)) * exp(c*(SOC/T - 1/296))`. The second
//! exponent divides SOC by temperature; that is the form the SAM model
//! defines and it is implemented verbatim here. The cell internal resistance used by
//! voltage-level models (0.001155 ohm) plays no role in this energy-domain
//! formulation and is intentionally not a parameter here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::MINUTES_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Vrfb,
    Lib,
}

#[derive(Debug, Error)]
pub enum BatteryError {
    #[error("power command {0} is not finite")]
    NonFiniteCommand(f64),
    #[error("invalid battery spec: {0}")]
    InvalidSpec(String),
    #[error("temperature {0} K must be > 0")]
    InvalidTemperature(f64),
}

/// Static ratings and operating envelope of one battery + inverter unit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatterySpec {
    pub tech: Technology,
    /// Nameplate energy capacity, Wh.
    pub energy_capacity_nominal_wh: f64,
    /// AC-side charge power limit, W.
    pub p_charge_max_w: f64,
    /// AC-side discharge power limit, W.
    pub p_discharge_max_w: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    /// One-way AC->DC efficiency while charging.
    pub eta_charge: f64,
    /// One-way DC->AC efficiency while discharging.
    pub eta_discharge: f64,
    /// Inverter standby draw, W (booked as house load by dispatch).
    pub standby_power_w: f64,
    /// Linear capacity fade per year; 0 for the VRFB. The lithium-ion unit
    /// ignores this and uses the calendar model instead.
    pub capacity_fade_rate: f64,
    /// SOC band over which power tapers linearly to zero at each bound.
    pub taper_band: f64,
}

impl BatterySpec {
    /// The 5 kW / 60 kWh flow battery: 5-95 % SOC, no capacity fade,
    /// round-trip efficiency 0.75 split into one-way sqrt(0.75).
    pub fn default_vrfb() -> Self {
        Self {
            tech: Technology::Vrfb,
            energy_capacity_nominal_wh: 60_000.0,
            p_charge_max_w: 5_000.0,
            p_discharge_max_w: 5_000.0,
            soc_min: 0.05,
            soc_max: 0.95,
            soc_initial: 0.50,
            eta_charge: 0.75_f64.sqrt(),
            eta_discharge: 0.75_f64.sqrt(),
            standby_power_w: 30.0,
            capacity_fade_rate: 0.0,
            taper_band: 0.10,
        }
    }

    /// The 3.3 kW / 9.8 kWh lithium-ion pack: 10-90 % SOC, calendar fade,
    /// round-trip efficiency 0.95 split into one-way sqrt(0.95).
    pub fn default_lib() -> Self {
        Self {
            tech: Technology::Lib,
            energy_capacity_nominal_wh: 9_800.0,
            p_charge_max_w: 3_300.0,
            p_discharge_max_w: 3_300.0,
            soc_min: 0.10,
            soc_max: 0.90,
            soc_initial: 0.50,
            eta_charge: 0.95_f64.sqrt(),
            eta_discharge: 0.95_f64.sqrt(),
            standby_power_w: 5.0,
            capacity_fade_rate: 0.0,
            taper_band: 0.10,
        }
    }

    pub fn validate(&self) -> Result<(), BatteryError> {
        let err = |msg: String| Err(BatteryError::InvalidSpec(msg));
        if !(0.0..=1.0).contains(&self.soc_min)
            || !(0.0..=1.0).contains(&self.soc_max)
            || !(self.soc_min < self.soc_initial && self.soc_initial < self.soc_max)
        {
            return err(format!(
                "need 0 <= soc_min < soc_initial < soc_max <= 1, got {}/{}/{}",
                self.soc_min, self.soc_initial, self.soc_max
            ));
        }
        if !(self.eta_charge > 0.0 && self.eta_charge <= 1.0)
            || !(self.eta_discharge > 0.0 && self.eta_discharge <= 1.0)
        {
            return err(format!(
                "efficiencies must be in (0, 1], got {}/{}",
                self.eta_charge, self.eta_discharge
            ));
        }
        if self.p_charge_max_w <= 0.0 || self.p_discharge_max_w <= 0.0 {
            return err("power limits must be > 0".to_string());
        }
        if self.energy_capacity_nominal_wh <= 0.0 {
            return err("energy capacity must be > 0".to_string());
        }
        if self.standby_power_w < 0.0 || self.capacity_fade_rate < 0.0 {
            return err("standby power and fade rate must be >= 0".to_string());
        }
        if !(self.taper_band > 0.0 && self.taper_band <= 0.5) {
            return err(format!("taper_band {} outside (0, 0.5]", self.taper_band));
        }
        Ok(())
    }
}

/// Parameters of the calendar-fade stress model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgingParams {
    /// Initial relative capacity; the model's fit starts slightly above 1.
    pub q0: f64,
    /// Stress-factor scale, 1/sqrt(day).
    pub a: f64,
    /// Temperature-exponent coefficient, K.
    pub b: f64,
    /// SOC-exponent coefficient, K.
    pub c: f64,
    /// Reference temperature, K.
    pub t_ref_k: f64,
    /// Ambient temperature the pack sits at, K (23 degC default).
    pub ambient_t_k: f64,
}

impl Default for AgingParams {
    fn default() -> Self {
        Self {
            q0: 1.02,
            a: 0.00266,
            b: -7280.0,
            c: 930.0,
            t_ref_k: 296.0,
            ambient_t_k: 296.15,
        }
    }
}

impl AgingParams {
    /// Stress factor `kcal` at temperature `t_k` and mean SOC.
    pub fn stress_factor(&self, t_k: f64, soc: f64) -> Result<f64, BatteryError> {
        if t_k <= 0.0 {
            return Err(BatteryError::InvalidTemperature(t_k));
        }
        let inv_ref = 1.0 / self.t_ref_k;
        let thermal = (self.b * (1.0 / t_k - inv_ref)).exp();
        let soc_term = (self.c * (soc / t_k - inv_ref)).exp();
        Ok(self.a * thermal * soc_term)
    }
}

/// Closed-form relative capacity after `t_days` at a constant mean SOC.
pub fn lib_calendar_fade(
    params: &AgingParams,
    t_days: f64,
    soc_mean: f64,
) -> Result<f64, BatteryError> {
    let kcal = params.stress_factor(params.ambient_t_k, soc_mean)?;
    Ok(params.q0 - kcal * t_days.sqrt())
}

/// Live battery state owned by one simulation worker.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
    /// Relative capacity from the fade model (lithium-ion only).
    pub q: f64,
    pub effective_capacity_wh: f64,
    pub elapsed_days: u32,
    /// Running SOC*minutes sum for the current day's mean SOC.
    pub soc_day_accumulator: f64,
    /// Cumulative AC-side charge energy, Wh.
    pub throughput_charge_wh: f64,
    /// Cumulative AC-side discharge energy, Wh.
    pub throughput_discharge_wh: f64,
    /// Operating bounds in force (seasonal policies may narrow the spec's).
    pub active_soc_min: f64,
    pub active_soc_max: f64,
}

impl BatteryState {
    pub fn new(spec: &BatterySpec, aging: &AgingParams) -> Self {
        let q = match spec.tech {
            Technology::Lib => aging.q0,
            Technology::Vrfb => 1.0,
        };
        Self {
            soc: spec.soc_initial,
            q,
            effective_capacity_wh: q.min(1.0) * spec.energy_capacity_nominal_wh,
            elapsed_days: 0,
            soc_day_accumulator: 0.0,
            throughput_charge_wh: 0.0,
            throughput_discharge_wh: 0.0,
            active_soc_min: spec.soc_min,
            active_soc_max: spec.soc_max,
        }
    }

    /// Narrows/widens the operating bounds (season change). A SOC outside the
    /// new bounds is left in place; the taper then forbids driving it
    /// further out, so it drifts back in through allowed operation only.
    pub fn set_active_bounds(&mut self, soc_min: f64, soc_max: f64) {
        self.active_soc_min = soc_min;
        self.active_soc_max = soc_max;
    }

    /// Usable energy window under the active bounds, Wh.
    pub fn usable_capacity_wh(&self) -> f64 {
        (self.active_soc_max - self.active_soc_min) * self.effective_capacity_wh
    }
}

/// AC-side power available for charge and discharge at the current state.
///
/// Power tapers linearly to zero over the outermost `taper_band` of SOC and
/// is further clamped so one 1-minute step cannot overshoot either bound.
pub fn power_limits(spec: &BatterySpec, state: &BatteryState) -> (f64, f64) {
    let band = spec.taper_band;
    let charge_taper = ((state.active_soc_max - state.soc) / band).clamp(0.0, 1.0);
    let discharge_taper = ((state.soc - state.active_soc_min) / band).clamp(0.0, 1.0);

    // Headroom: the AC power that exactly reaches the bound in one minute.
    let cap = state.effective_capacity_wh;
    let charge_headroom_w =
        ((state.active_soc_max - state.soc) * cap * 60.0 / spec.eta_charge).max(0.0);
    let discharge_headroom_w =
        ((state.soc - state.active_soc_min) * cap * 60.0 * spec.eta_discharge).max(0.0);

    let p_charge = (spec.p_charge_max_w * charge_taper).min(charge_headroom_w);
    let p_discharge = (spec.p_discharge_max_w * discharge_taper).min(discharge_headroom_w);
    (p_charge, p_discharge)
}

/// Executes one 1-minute step with a signed AC command (positive = charge).
///
/// Returns the updated state, the AC power actually absorbed/delivered, and
/// the conversion loss in Wh for the step.
pub fn step(
    spec: &BatterySpec,
    state: &BatteryState,
    p_command_ac_w: f64,
    dt_minutes: f64,
) -> Result<(BatteryState, f64, f64), BatteryError> {
    if !p_command_ac_w.is_finite() {
        return Err(BatteryError::NonFiniteCommand(p_command_ac_w));
    }
    let mut next = *state;
    let (p_charge_avail, p_discharge_avail) = power_limits(spec, state);
    let p_actual = p_command_ac_w.clamp(-p_discharge_avail, p_charge_avail);
    let dt_hours = dt_minutes / 60.0;
    let cap = state.effective_capacity_wh;

    let loss_wh;
    if p_actual > 0.0 {
        let ac_wh = p_actual * dt_hours;
        let dc_wh = ac_wh * spec.eta_charge;
        next.soc = (state.soc + dc_wh / cap).min(state.active_soc_max.max(state.soc));
        next.throughput_charge_wh += ac_wh;
        loss_wh = ac_wh - dc_wh;
    } else if p_actual < 0.0 {
        let ac_wh = -p_actual * dt_hours;
        let dc_wh = ac_wh / spec.eta_discharge;
        next.soc = (state.soc - dc_wh / cap).max(state.active_soc_min.min(state.soc));
        next.throughput_discharge_wh += ac_wh;
        loss_wh = dc_wh - ac_wh;
    } else {
        loss_wh = 0.0;
    }

    next.soc_day_accumulator += next.soc * dt_minutes;
    Ok((next, p_actual, loss_wh))
}

/// Applies one day of capacity fade at a day boundary and resets the daily
/// SOC accumulator.
///
/// Lithium-ion: incremental calendar fade with the day's time-weighted mean
/// SOC, telescoping to the closed form at constant SOC. VRFB: linear
/// `capacity_fade_rate` per year, the identity at the default rate of 0.
pub fn apply_daily_fade(
    spec: &BatterySpec,
    state: &BatteryState,
    params: &AgingParams,
) -> Result<BatteryState, BatteryError> {
    let mut next = *state;
    let day = state.elapsed_days + 1;
    let soc_mean = state.soc_day_accumulator / f64::from(MINUTES_PER_DAY);

    match spec.tech {
        Technology::Lib => {
            let kcal = params.stress_factor(params.ambient_t_k, soc_mean)?;
            let delta_q = kcal * (f64::from(day).sqrt() - f64::from(day - 1).sqrt());
            next.q = (state.q - delta_q).max(0.0);
        }
        Technology::Vrfb => {
            if spec.capacity_fade_rate > 0.0 {
                next.q = (state.q - spec.capacity_fade_rate / 365.0).max(0.0);
            }
        }
    }
    next.effective_capacity_wh = next.q.min(1.0) * spec.energy_capacity_nominal_wh;
    next.elapsed_days = day;
    next.soc_day_accumulator = 0.0;
    Ok(next)
}
