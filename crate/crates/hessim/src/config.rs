//! Run configuration: a single TOML file with full-default fallback.
//!
//! Every section is optional; an empty file (or no file) runs the bundled
//! synthetic profiles through scenario s1 with the reference parameter set.
//! `validate` returns diagnostics instead of failing, so a dry run can list
//! every problem at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{AgingParams, BatterySpec};
use crate::dispatch::{BetaCurve, ScenarioId, ScenarioPolicy, SeasonalSocBounds};
use crate::economics::{CostTable, Rates, SystemConfig, Tariff};
use crate::profiles::{load_profile, MinuteSeries, ProfileKind, ProfileError, ScalingPolicy};
use crate::sweep::{SecondaryPriority, UseCase};
use crate::HORIZON_YEARS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// A validation finding with the config field path it concerns.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesSection {
    pub source: ProfileSource,
    pub pv_path: Option<PathBuf>,
    pub load_path: Option<PathBuf>,
    pub pv_native_step_s: u32,
    pub load_native_step_s: u32,
    /// Shape scales applied to the synthetic profiles.
    pub synthetic_pv_scale: f64,
    pub synthetic_load_scale: f64,
}

impl Default for ProfilesSection {
    fn default() -> Self {
        Self {
            source: ProfileSource::Synthetic,
            pv_path: None,
            load_path: None,
            pv_native_step_s: 60,
            load_native_step_s: 900,
            synthetic_pv_scale: 1.0,
            synthetic_load_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub scenarios: Vec<String>,
    pub years: u32,
    pub workers: usize,
    pub trace: bool,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scenarios: vec!["s1".to_string()],
            years: HORIZON_YEARS,
            workers: 0,
            trace: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Field-level battery overrides on top of the per-technology defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryOverride {
    pub energy_capacity_nominal_wh: Option<f64>,
    pub p_charge_max_w: Option<f64>,
    pub p_discharge_max_w: Option<f64>,
    pub soc_min: Option<f64>,
    pub soc_max: Option<f64>,
    pub soc_initial: Option<f64>,
    pub eta_charge: Option<f64>,
    pub eta_discharge: Option<f64>,
    pub standby_power_w: Option<f64>,
    pub capacity_fade_rate: Option<f64>,
    pub taper_band: Option<f64>,
}

impl BatteryOverride {
    fn apply(&self, mut spec: BatterySpec) -> BatterySpec {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { spec.$field = v; })*
            };
        }
        set!(
            energy_capacity_nominal_wh,
            p_charge_max_w,
            p_discharge_max_w,
            soc_min,
            soc_max,
            soc_initial,
            eta_charge,
            eta_discharge,
            standby_power_w,
            capacity_fade_rate,
            taper_band
        );
        spec
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySection {
    pub vrfb: BatteryOverride,
    pub lib: BatteryOverride,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationSection {
    /// VRFB share of the fixed split (scenarios 1 and 4).
    pub alpha: f64,
    /// Peak-shaving band half-width, W (scenario 3).
    pub band_w: f64,
    pub beta_curve: BetaCurve,
}

impl Default for AllocationSection {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            band_w: 1_000.0,
            beta_curve: BetaCurve::default(),
        }
    }
}

/// SOC windows for a single seasonal (s4) run, percent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct S4Section {
    pub vrfb_summer_pct: [u32; 2],
    pub vrfb_winter_pct: [u32; 2],
    pub lib_summer_pct: [u32; 2],
    pub lib_winter_pct: [u32; 2],
}

impl Default for S4Section {
    fn default() -> Self {
        Self {
            vrfb_summer_pct: [5, 95],
            vrfb_winter_pct: [5, 95],
            lib_summer_pct: [10, 90],
            lib_winter_pct: [10, 90],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub use_case: String,
    pub secondary_priority: SecondaryPriority,
    /// Keep and consume the per-case progress file.
    pub resume: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            use_case: "uc1".to_string(),
            secondary_priority: SecondaryPriority::ObuLib,
            resume: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profiles: ProfilesSection,
    pub run: RunSection,
    pub scaling: ScalingPolicy,
    pub battery: BatterySection,
    pub aging: AgingParams,
    pub tariff: Tariff,
    pub costs: CostTable,
    pub rates: Rates,
    pub allocation: AllocationSection,
    pub s4: S4Section,
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn vrfb_spec(&self) -> BatterySpec {
        self.battery.vrfb.apply(BatterySpec::default_vrfb())
    }

    pub fn lib_spec(&self) -> BatterySpec {
        self.battery.lib.apply(BatterySpec::default_lib())
    }

    pub fn seasonal_bounds(&self) -> SeasonalSocBounds {
        let f = |pct: [u32; 2]| (f64::from(pct[0]) / 100.0, f64::from(pct[1]) / 100.0);
        SeasonalSocBounds {
            vrfb_summer: f(self.s4.vrfb_summer_pct),
            vrfb_winter: f(self.s4.vrfb_winter_pct),
            lib_summer: f(self.s4.lib_summer_pct),
            lib_winter: f(self.s4.lib_winter_pct),
        }
    }

    /// The dispatch policy for a scenario under this config.
    pub fn policy(&self, id: ScenarioId) -> ScenarioPolicy {
        match id {
            ScenarioId::S1FixedSplit => ScenarioPolicy::S1FixedSplit {
                alpha: self.allocation.alpha,
            },
            ScenarioId::S2PsocSplit => ScenarioPolicy::S2PsocSplit {
                curve: self.allocation.beta_curve.clone(),
            },
            ScenarioId::S3BandSplit => ScenarioPolicy::S3BandSplit {
                band_w: self.allocation.band_w,
            },
            ScenarioId::S4SocSweepCase => ScenarioPolicy::S4SocSweepCase {
                alpha: self.allocation.alpha,
                seasonal: self.seasonal_bounds(),
            },
            ScenarioId::S5SingleVrfb => ScenarioPolicy::S5SingleVrfb,
            ScenarioId::S5SingleLib => ScenarioPolicy::S5SingleLib,
        }
    }

    pub fn system_config(&self, id: ScenarioId) -> SystemConfig {
        match id {
            ScenarioId::S5SingleVrfb => SystemConfig::VrfbOnly,
            ScenarioId::S5SingleLib => SystemConfig::LibOnly,
            _ => SystemConfig::Hess,
        }
    }

    pub fn scenario_ids(&self) -> Result<Vec<ScenarioId>, ConfigError> {
        self.run
            .scenarios
            .iter()
            .map(|s| s.parse::<ScenarioId>().map_err(ConfigError::Invalid))
            .collect()
    }

    pub fn use_case(&self) -> Result<UseCase, ConfigError> {
        self.sweep
            .use_case
            .parse::<UseCase>()
            .map_err(ConfigError::Invalid)
    }

    /// Loads (or synthesizes) the year-1 PV and load profiles.
    pub fn load_profiles(&self) -> Result<(MinuteSeries, MinuteSeries), ConfigError> {
        match self.profiles.source {
            ProfileSource::Synthetic => Ok(crate::synthetic::synthetic_year_scaled(
                self.profiles.synthetic_pv_scale,
                self.profiles.synthetic_load_scale,
            )),
            ProfileSource::Csv => {
                let pv_path = self.profiles.pv_path.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("profiles.pv_path required for csv source".into())
                })?;
                let load_path = self.profiles.load_path.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("profiles.load_path required for csv source".into())
                })?;
                let pv = load_profile(pv_path, ProfileKind::Pv, self.profiles.pv_native_step_s)?;
                let load =
                    load_profile(load_path, ProfileKind::Load, self.profiles.load_native_step_s)?;
                Ok((pv, load))
            }
        }
    }

    /// Dry-run check of files, ranges and override sanity; never simulates.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut diag = |path: &str, message: String| {
            out.push(Diagnostic {
                path: path.to_string(),
                message,
            });
        };

        if let ProfileSource::Csv = self.profiles.source {
            match &self.profiles.pv_path {
                Some(p) if !p.exists() => {
                    diag("profiles.pv_path", format!("file not found: {}", p.display()))
                }
                None => diag("profiles.pv_path", "required for csv source".into()),
                _ => {}
            }
            match &self.profiles.load_path {
                Some(p) if !p.exists() => diag(
                    "profiles.load_path",
                    format!("file not found: {}", p.display()),
                ),
                None => diag("profiles.load_path", "required for csv source".into()),
                _ => {}
            }
        }
        for (path, step) in [
            ("profiles.pv_native_step_s", self.profiles.pv_native_step_s),
            ("profiles.load_native_step_s", self.profiles.load_native_step_s),
        ] {
            let ok = step > 0 && (60 % step == 0 || (step % 60 == 0 && 86_400 % step == 0));
            if !ok {
                diag(path, format!("{step} s does not fit the 1-minute grid"));
            }
        }
        if self.profiles.synthetic_pv_scale < 0.0
            || self.profiles.synthetic_load_scale < 0.0
            || self.profiles.synthetic_pv_scale.is_nan()
            || self.profiles.synthetic_load_scale.is_nan()
        {
            diag("profiles", "synthetic scales must be >= 0".into());
        }

        if self.run.years == 0 || self.run.years > HORIZON_YEARS {
            diag("run.years", format!("{} outside 1..={HORIZON_YEARS}", self.run.years));
        }
        if self.run.scenarios.is_empty() {
            diag("run.scenarios", "at least one scenario required".into());
        }
        for s in &self.run.scenarios {
            if s.parse::<ScenarioId>().is_err() {
                diag("run.scenarios", format!("unknown scenario `{s}`"));
            }
        }

        if let Err(msg) = self.scaling.validate() {
            diag("scaling", msg);
        }

        for (path, spec) in [
            ("battery.vrfb", self.vrfb_spec()),
            ("battery.lib", self.lib_spec()),
        ] {
            if spec.soc_min >= spec.soc_max {
                diag(
                    &format!("{path}.soc_min"),
                    format!("soc_min {} >= soc_max {}", spec.soc_min, spec.soc_max),
                );
            } else if let Err(e) = spec.validate() {
                diag(path, e.to_string());
            }
        }

        if self.aging.a <= 0.0 || self.aging.a.is_nan() {
            diag("aging.a", format!("{} must be > 0", self.aging.a));
        }
        if self.aging.ambient_t_k <= 0.0 || self.aging.t_ref_k <= 0.0 {
            diag("aging", "temperatures must be > 0 K".into());
        }

        if let Err(msg) = self.tariff.validate() {
            diag("tariff", msg);
        }
        if let Err(msg) = self.costs.validate() {
            diag("costs", msg);
        }
        if let Err(msg) = self.rates.validate() {
            diag("rates", msg);
        }

        if !(0.0..=1.0).contains(&self.allocation.alpha) {
            diag("allocation.alpha", format!("{} outside [0, 1]", self.allocation.alpha));
        }
        if self.allocation.band_w <= 0.0 || self.allocation.band_w.is_nan() {
            diag("allocation.band_w", format!("{} must be > 0", self.allocation.band_w));
        }
        if let Err(msg) = self.allocation.beta_curve.validate() {
            diag("allocation.beta_curve", msg);
        }

        for (path, pct) in [
            ("s4.vrfb_summer_pct", self.s4.vrfb_summer_pct),
            ("s4.vrfb_winter_pct", self.s4.vrfb_winter_pct),
            ("s4.lib_summer_pct", self.s4.lib_summer_pct),
            ("s4.lib_winter_pct", self.s4.lib_winter_pct),
        ] {
            if pct[0] >= pct[1] || pct[1] > 100 {
                diag(path, format!("[{}, {}] is not a valid SOC window", pct[0], pct[1]));
            }
        }

        if self.sweep.use_case.parse::<UseCase>().is_err() {
            diag("sweep.use_case", format!("unknown use case `{}`", self.sweep.use_case));
        }

        out
    }
}
