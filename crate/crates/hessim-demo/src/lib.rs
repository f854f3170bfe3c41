//! Browser bindings for the simulator: three interactive operations over
//! the bundled synthetic profiles, each returning JSON for the demo page.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hessim::battery::{lib_calendar_fade, AgingParams, BatterySpec};
use hessim::dispatch::{
    dispatch_step, Plant, PlantSpec, ScenarioId, ScenarioPolicy, SeasonalSocBounds,
};
use hessim::economics::{self, Rates, SystemConfig, Tariff};
use hessim::kpi::compute_kpis;
use hessim::synthetic;
use hessim::timeline::MINUTES_PER_DAY;

fn parse_scenario(id: &str) -> Result<ScenarioId, String> {
    id.parse::<ScenarioId>()
}

fn policy_for(id: ScenarioId, config: &hessim::config::RunConfig) -> ScenarioPolicy {
    config.policy(id)
}

fn soc_bounds_policy(
    id: ScenarioId,
    vrfb_pct: (u32, u32),
    lib_pct: (u32, u32),
    config: &hessim::config::RunConfig,
) -> ScenarioPolicy {
    if id == ScenarioId::S4SocSweepCase {
        let f = |p: (u32, u32)| (f64::from(p.0) / 100.0, f64::from(p.1) / 100.0);
        ScenarioPolicy::S4SocSweepCase {
            alpha: 0.75,
            seasonal: SeasonalSocBounds {
                vrfb_summer: f(vrfb_pct),
                vrfb_winter: f(vrfb_pct),
                lib_summer: f(lib_pct),
                lib_winter: f(lib_pct),
            },
        }
    } else {
        policy_for(id, config)
    }
}

#[derive(Serialize)]
struct DispatchTrace {
    minutes: usize,
    pv_w: Vec<f64>,
    load_w: Vec<f64>,
    grid_import_w: Vec<f64>,
    grid_export_w: Vec<f64>,
    soc_vrfb: Vec<f64>,
    soc_lib: Vec<f64>,
    vrfb_power_w: Vec<f64>,
    lib_power_w: Vec<f64>,
}

/// Simulates `days` of the synthetic week under a scenario and returns the
/// minute-level flows and SOC trajectories.
#[wasm_bindgen]
pub fn simulate_days(
    scenario: &str,
    days: u32,
    vrfb_min_pct: u32,
    vrfb_max_pct: u32,
    lib_min_pct: u32,
    lib_max_pct: u32,
) -> Result<String, JsError> {
    simulate_days_impl(scenario, days, vrfb_min_pct, vrfb_max_pct, lib_min_pct, lib_max_pct)
        .map_err(|e| JsError::new(&e))
}

fn simulate_days_impl(
    scenario: &str,
    days: u32,
    vrfb_min_pct: u32,
    vrfb_max_pct: u32,
    lib_min_pct: u32,
    lib_max_pct: u32,
) -> Result<String, String> {
    let id = parse_scenario(scenario)?;
    let days = days.clamp(1, 28);
    let config = hessim::config::RunConfig::default();
    let policy = soc_bounds_policy(id, (vrfb_min_pct, vrfb_max_pct), (lib_min_pct, lib_max_pct), &config);
    policy.validate().map_err(|e| e.to_string())?;
    let spec = PlantSpec::for_scenario(id, config.vrfb_spec(), config.lib_spec());
    let mut plant = Plant::new(&spec, &AgingParams::default());
    if let ScenarioPolicy::S4SocSweepCase { seasonal, .. } = &policy {
        if let Some(unit) = plant.vrfb.as_mut() {
            unit.state
                .set_active_bounds(seasonal.vrfb_winter.0, seasonal.vrfb_winter.1);
        }
        if let Some(unit) = plant.lib.as_mut() {
            unit.state
                .set_active_bounds(seasonal.lib_winter.0, seasonal.lib_winter.1);
        }
    }

    let n = (days * MINUTES_PER_DAY) as usize;
    let mut trace = DispatchTrace {
        minutes: n,
        pv_w: Vec::with_capacity(n),
        load_w: Vec::with_capacity(n),
        grid_import_w: Vec::with_capacity(n),
        grid_export_w: Vec::with_capacity(n),
        soc_vrfb: Vec::with_capacity(n),
        soc_lib: Vec::with_capacity(n),
        vrfb_power_w: Vec::with_capacity(n),
        lib_power_w: Vec::with_capacity(n),
    };
    for day in 0..days {
        let dow = (day % 7) as usize;
        for minute in 0..MINUTES_PER_DAY {
            let pv = synthetic::pv_w(dow, minute);
            let load = synthetic::load_w(dow, minute);
            let rec = dispatch_step(&policy, &mut plant, pv, load).map_err(|e| e.to_string())?;
            trace.pv_w.push(rec.pv_w);
            trace.load_w.push(rec.load_w);
            trace.grid_import_w.push(rec.grid_import_w);
            trace.grid_export_w.push(rec.grid_export_w);
            trace
                .soc_vrfb
                .push(plant.vrfb.as_ref().map_or(f64::NAN, |u| u.state.soc));
            trace
                .soc_lib
                .push(plant.lib.as_ref().map_or(f64::NAN, |u| u.state.soc));
            trace
                .vrfb_power_w
                .push(rec.pv_to_vrfb_w - rec.vrfb_to_load_w);
            trace.lib_power_w.push(rec.pv_to_lib_w - rec.lib_to_load_w);
        }
    }
    Ok(serde_json::to_string(&trace).expect("trace serializes"))
}

#[derive(Serialize)]
struct FadeCurve {
    days: Vec<f64>,
    q: Vec<f64>,
    capacity_wh: Vec<f64>,
}

/// Relative-capacity curve of the lithium-ion pack at a constant mean SOC
/// and ambient temperature, sampled weekly.
#[wasm_bindgen]
pub fn fade_curve(soc_pct: f64, ambient_c: f64, years: u32) -> Result<String, JsError> {
    fade_curve_impl(soc_pct, ambient_c, years).map_err(|e| JsError::new(&e))
}

fn fade_curve_impl(soc_pct: f64, ambient_c: f64, years: u32) -> Result<String, String> {
    if !(0.0..=100.0).contains(&soc_pct) {
        return Err("soc_pct must be in [0, 100]".to_string());
    }
    let years = years.clamp(1, 30);
    let params = AgingParams {
        ambient_t_k: ambient_c + 273.15,
        ..AgingParams::default()
    };
    let nominal = BatterySpec::default_lib().energy_capacity_nominal_wh;
    let mut curve = FadeCurve {
        days: Vec::new(),
        q: Vec::new(),
        capacity_wh: Vec::new(),
    };
    let mut day = 0.0;
    while day <= f64::from(years) * 365.0 {
        let q = lib_calendar_fade(&params, day, soc_pct / 100.0).map_err(|e| e.to_string())?;
        curve.days.push(day);
        curve.q.push(q);
        curve.capacity_wh.push(q.clamp(0.0, 1.0) * nominal);
        day += 7.0;
    }
    Ok(serde_json::to_string(&curve).expect("curve serializes"))
}

#[derive(Serialize)]
struct ScenarioSummary {
    scenario: String,
    years: u32,
    scr: f64,
    ssr: f64,
    grf: f64,
    obu_vrfb: f64,
    obu_lib: f64,
    eg_kwh: f64,
    investment_eur: f64,
    npv_eur: f64,
    lcoe_eur_per_kwh: Option<f64>,
    irr: Option<f64>,
    spb_years: Option<f64>,
}

/// Full-horizon KPI + economics summary for one scenario on the synthetic
/// profiles.
#[wasm_bindgen]
pub fn scenario_kpis(scenario: &str, years: u32) -> Result<String, JsError> {
    scenario_kpis_impl(scenario, years).map_err(|e| JsError::new(&e))
}

fn scenario_kpis_impl(scenario: &str, years: u32) -> Result<String, String> {
    let id = parse_scenario(scenario)?;
    let years = years.clamp(1, hessim::HORIZON_YEARS);
    let config = hessim::config::RunConfig::default();
    let policy = policy_for(id, &config);
    let spec = PlantSpec::for_scenario(id, config.vrfb_spec(), config.lib_spec());
    let (pv, load) = synthetic::synthetic_year();
    let inputs = hessim::dispatch::HorizonInputs {
        pv_base: &pv,
        load_base: &load,
        scaling: config.scaling,
        aging: config.aging,
        years,
        offpeak_window: Tariff::default().offpeak_window,
    };
    let outcome =
        hessim::dispatch::simulate_horizon(&policy, &spec, &inputs).map_err(|e| e.to_string())?;
    let kpi = compute_kpis(&outcome.ledgers).map_err(|e| e.to_string())?;
    let rates = Rates {
        horizon_years: years,
        replacement_year: Rates::default().replacement_year.min(years),
        ..Rates::default()
    };
    let econ = economics::evaluate(
        &outcome.ledgers,
        &Tariff::default(),
        &config.costs,
        &rates,
        match id {
            ScenarioId::S5SingleVrfb => SystemConfig::VrfbOnly,
            ScenarioId::S5SingleLib => SystemConfig::LibOnly,
            _ => SystemConfig::Hess,
        },
    )
    .map_err(|e| e.to_string())?;
    let summary = ScenarioSummary {
        scenario: id.as_str().to_string(),
        years,
        scr: kpi.scr,
        ssr: kpi.ssr,
        grf: kpi.grf,
        obu_vrfb: kpi.obu_vrfb,
        obu_lib: kpi.obu_lib,
        eg_kwh: kpi.eg_kwh,
        investment_eur: econ.investment_eur,
        npv_eur: econ.npv_eur,
        lcoe_eur_per_kwh: econ.lcoe_eur_per_kwh,
        irr: econ.irr,
        spb_years: econ.spb_years,
    };
    Ok(serde_json::to_string(&summary).expect("summary serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_days_returns_minute_series() {
        let json = simulate_days_impl("s1", 2, 5, 95, 10, 90).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["minutes"], 2 * 1440);
        assert_eq!(value["pv_w"].as_array().unwrap().len(), 2 * 1440);
        let soc0 = value["soc_lib"][0].as_f64().unwrap();
        assert!((0.1..=0.9).contains(&soc0));
    }

    #[test]
    fn fade_curve_starts_at_q0() {
        let json = fade_curve_impl(50.0, 23.0, 10).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["q"][0].as_f64().unwrap(), 1.02);
        let q: Vec<f64> = value["q"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!(q.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn scenario_kpis_cover_all_scenarios() {
        for scenario in ["s1", "s2", "s3", "s5_vrfb", "s5_lib"] {
            let json = scenario_kpis_impl(scenario, 1).unwrap();
            let value: serde_json::Value = serde_json::from_str(&json).unwrap();
            let scr = value["scr"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&scr), "{scenario}: scr {scr}");
        }
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(simulate_days_impl("s9", 1, 5, 95, 10, 90).is_err());
        assert!(scenario_kpis_impl("bogus", 1).is_err());
    }
}
