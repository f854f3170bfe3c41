//! Ingestion, resampling and year-scaling of the PV and load time series.
//!
//! Input files are two-column CSVs (`timestamp,power_w`) on a uniform native
//! step. Sub-minute data is mean-aggregated to minutes, coarser data (e.g.
//! 15-minute block averages) is step-held so block energy is conserved.
//! The simulation calendar is a fixed 365-day year; Feb 29 rows in source
//! data are dropped on ingestion.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::{day_of_year, SECONDS_PER_DAY};
use crate::{kahan_sum, HORIZON_YEARS, MINUTES_PER_YEAR};

const SECONDS_PER_YEAR: u64 = SECONDS_PER_DAY as u64 * 365;
/// Missing spans of at least this length are rejected rather than filled.
const MAX_FILLABLE_GAP_S: u64 = 3_600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Pv,
    Load,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("io error reading profile: {0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: expected header `timestamp,power_w`, found `{0}`")]
    Header(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: timestamps must be strictly increasing")]
    NotIncreasing { line: usize },
    #[error("native step {0} s must divide or be a multiple of 60 s and divide a day")]
    InvalidStep(u32),
    #[error("data gap of {minutes} min starting at minute-of-year {start_minute} (>= 60 min)")]
    Gap { start_minute: u64, minutes: u64 },
    #[error("profile covers {actual} of {expected} minutes after resampling")]
    Length { expected: usize, actual: usize },
    #[error("year {0} outside the 1..={HORIZON_YEARS} horizon")]
    YearRange(u32),
    #[error("sample at index {index} is {value}; samples must be finite and >= 0")]
    BadSample { index: usize, value: f64 },
}

/// One calendar year of 1-minute average power samples in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteSeries {
    values: Vec<f64>,
    pub year_index: u32,
    pub kind: ProfileKind,
}

impl MinuteSeries {
    /// Wraps a full year of minute samples, enforcing length, finiteness and
    /// non-negativity.
    pub fn new(values: Vec<f64>, kind: ProfileKind) -> Result<Self, ProfileError> {
        if values.len() != MINUTES_PER_YEAR {
            return Err(ProfileError::Length {
                expected: MINUTES_PER_YEAR,
                actual: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ProfileError::BadSample { index, value });
            }
        }
        Ok(Self {
            values,
            year_index: 1,
            kind,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total annual energy in Wh (compensated sum; samples are W over 1 min).
    pub fn annual_energy_wh(&self) -> f64 {
        kahan_sum(self.values.iter().map(|w| w / 60.0))
    }
}

/// Year-over-year scaling: PV degradation and consumption growth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingPolicy {
    /// Fractional PV output loss per year (0.0045 = -0.45 %/year).
    pub pv_degradation_rate: f64,
    /// Fractional consumption growth per year (0.02 = +2 %/year).
    pub load_growth_rate: f64,
}

impl Default for ScalingPolicy {
    fn default() -> Self {
        Self {
            pv_degradation_rate: 0.0045,
            load_growth_rate: 0.02,
        }
    }
}

impl ScalingPolicy {
    pub fn validate(&self) -> Result<(), String> {
        for (name, rate) in [
            ("pv_degradation_rate", self.pv_degradation_rate),
            ("load_growth_rate", self.load_growth_rate),
        ] {
            if !(0.0..=0.2).contains(&rate) {
                return Err(format!("{name} = {rate} outside [0, 0.2]"));
            }
        }
        Ok(())
    }

    /// Multiplicative factor applied to a year-1 series for the given year.
    pub fn factor(&self, kind: ProfileKind, year: u32) -> f64 {
        let exponent = (year - 1) as i32;
        match kind {
            ProfileKind::Pv => (1.0 - self.pv_degradation_rate).powi(exponent),
            ProfileKind::Load => (1.0 + self.load_growth_rate).powi(exponent),
        }
    }
}

/// Scales a year-1 base series to the given horizon year.
///
/// Year 1 is the exact identity (factor 1.0).
pub fn scale_to_year(
    base: &MinuteSeries,
    policy: &ScalingPolicy,
    year: u32,
) -> Result<MinuteSeries, ProfileError> {
    if year == 0 || year > HORIZON_YEARS {
        return Err(ProfileError::YearRange(year));
    }
    let factor = policy.factor(base.kind, year);
    let values = base.values.iter().map(|v| v * factor).collect();
    Ok(MinuteSeries {
        values,
        year_index: year,
        kind: base.kind,
    })
}

/// Loads a timestamped CSV profile and resamples it to the 1-minute grid.
///
/// `native_step_s` is the file's uniform sampling period. Gaps shorter than
/// 60 min are linearly interpolated on the native grid; longer gaps are
/// rejected with their location.
pub fn load_profile(
    path: &Path,
    kind: ProfileKind,
    native_step_s: u32,
) -> Result<MinuteSeries, ProfileError> {
    let file = File::open(path)?;
    load_profile_from(BufReader::new(file), kind, native_step_s)
}

/// Same as [`load_profile`] over any reader (used by tests and tools).
pub fn load_profile_from<R: Read>(
    reader: R,
    kind: ProfileKind,
    native_step_s: u32,
) -> Result<MinuteSeries, ProfileError> {
    check_step(native_step_s)?;
    let slots = parse_to_grid(reader, native_step_s)?;
    let native = fill_gaps(slots, native_step_s)?;
    let minutes = resample_to_minutes(&native, native_step_s);
    MinuteSeries::new(minutes, kind)
}

fn check_step(step: u32) -> Result<(), ProfileError> {
    let divides_minute = step > 0 && 60 % step == 0;
    let multiple_of_minute = step > 0 && step.is_multiple_of(60) && SECONDS_PER_DAY.is_multiple_of(step);
    if divides_minute || multiple_of_minute {
        Ok(())
    } else {
        Err(ProfileError::InvalidStep(step))
    }
}

/// Parses rows and places them on the native-step grid of one civil year.
/// Feb 29 rows are dropped. The year is taken from the first row.
fn parse_to_grid<R: Read>(reader: R, step: u32) -> Result<Vec<Option<f64>>, ProfileError> {
    let n_slots = (SECONDS_PER_YEAR / step as u64) as usize;
    let mut slots: Vec<Option<f64>> = vec![None; n_slots];
    let mut lines = BufReader::new(reader).lines();

    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(ProfileError::Header(String::new())),
    };
    let header_clean = header.trim_start_matches('\u{feff}').trim();
    if header_clean != "timestamp,power_w" {
        return Err(ProfileError::Header(header_clean.to_string()));
    }

    let mut base_year: Option<i32> = None;
    let mut last_second: Option<i64> = None;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (ts_str, power_str) =
            trimmed
                .split_once(',')
                .ok_or_else(|| ProfileError::Parse {
                    line: line_no,
                    msg: "expected `timestamp,power_w`".to_string(),
                })?;
        let stamp = parse_timestamp(ts_str.trim()).map_err(|msg| ProfileError::Parse {
            line: line_no,
            msg,
        })?;
        let power: f64 = power_str
            .trim()
            .parse()
            .map_err(|e| ProfileError::Parse {
                line: line_no,
                msg: format!("bad power value `{}`: {e}", power_str.trim()),
            })?;
        if !power.is_finite() || power < 0.0 {
            return Err(ProfileError::Parse {
                line: line_no,
                msg: format!("power {power} must be finite and >= 0"),
            });
        }

        let year = *base_year.get_or_insert(stamp.year);
        if stamp.year != year && !(stamp.is_feb29()) {
            return Err(ProfileError::Parse {
                line: line_no,
                msg: format!("timestamp year {} differs from first row ({year})", stamp.year),
            });
        }
        // Ordering is checked on raw second-of-year including Feb 29 rows.
        let raw_second = stamp.raw_second_of_year();
        if let Some(last) = last_second {
            if raw_second <= last {
                return Err(ProfileError::NotIncreasing { line: line_no });
            }
        }
        last_second = Some(raw_second);

        let Some(second) = stamp.second_of_fixed_year() else {
            continue; // Feb 29: dropped
        };
        if second % step as u64 != 0 {
            return Err(ProfileError::Parse {
                line: line_no,
                msg: format!("timestamp not aligned to the {step} s native step"),
            });
        }
        slots[(second / step as u64) as usize] = Some(power);
    }
    Ok(slots)
}

/// Fills interior gaps shorter than 60 min by linear interpolation; missing
/// coverage at the year's edges is a length error, interior gaps >= 60 min
/// are rejected with their location.
fn fill_gaps(mut slots: Vec<Option<f64>>, step: u32) -> Result<Vec<f64>, ProfileError> {
    let first = slots.iter().position(Option::is_some);
    let last = slots.iter().rposition(Option::is_some);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(ProfileError::Length {
                expected: MINUTES_PER_YEAR,
                actual: 0,
            })
        }
    };

    let leading_s = first as u64 * step as u64;
    let trailing_s = (slots.len() - 1 - last) as u64 * step as u64;
    if leading_s >= MAX_FILLABLE_GAP_S || trailing_s >= MAX_FILLABLE_GAP_S {
        let covered_minutes = ((last - first + 1) as u64 * step as u64 / 60) as usize;
        return Err(ProfileError::Length {
            expected: MINUTES_PER_YEAR,
            actual: covered_minutes,
        });
    }

    // Interior gaps.
    let mut i = first;
    while i <= last {
        if slots[i].is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while slots[i].is_none() {
            i += 1;
        }
        let run_len = i - run_start;
        let gap_seconds = run_len as u64 * step as u64;
        if gap_seconds >= MAX_FILLABLE_GAP_S {
            return Err(ProfileError::Gap {
                start_minute: run_start as u64 * step as u64 / 60,
                minutes: gap_seconds / 60,
            });
        }
        let left = slots[run_start - 1].unwrap();
        let right = slots[i].unwrap();
        for (k, slot) in slots[run_start..i].iter_mut().enumerate() {
            let t = (k + 1) as f64 / (run_len + 1) as f64;
            *slot = Some(left + (right - left) * t);
        }
    }

    // Sub-hour edge runs: nearest-value extension (single-anchor).
    let first_value = slots[first].unwrap();
    for slot in slots[..first].iter_mut() {
        *slot = Some(first_value);
    }
    let last_value = slots[last].unwrap();
    for slot in slots[last + 1..].iter_mut() {
        *slot = Some(last_value);
    }

    Ok(slots.into_iter().map(Option::unwrap).collect())
}

/// Mean-aggregates sub-minute data or step-holds coarser data onto minutes.
fn resample_to_minutes(native: &[f64], step: u32) -> Vec<f64> {
    if step == 60 {
        return native.to_vec();
    }
    if step < 60 {
        let per_minute = (60 / step) as usize;
        native
            .chunks_exact(per_minute)
            .map(|chunk| chunk.iter().sum::<f64>() / per_minute as f64)
            .collect()
    } else {
        let expand = (step / 60) as usize;
        let mut out = Vec::with_capacity(native.len() * expand);
        for &v in native {
            out.extend(std::iter::repeat_n(v, expand));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Timestamp {
    year: i32,
    month: u32,
    day: u32,
    hour: u32,
    minute: u32,
    second: u32,
}

impl Timestamp {
    fn is_feb29(&self) -> bool {
        self.month == 2 && self.day == 29
    }

    /// Second-of-year on the fixed 365-day calendar; `None` for Feb 29.
    fn second_of_fixed_year(&self) -> Option<u64> {
        let doy = day_of_year(self.month, self.day)?;
        Some(
            doy as u64 * SECONDS_PER_DAY as u64
                + self.hour as u64 * 3600
                + self.minute as u64 * 60
                + self.second as u64,
        )
    }

    /// Monotone second index including Feb 29, for ordering checks only.
    fn raw_second_of_year(&self) -> i64 {
        const RAW_MONTH_DAYS: [i64; 12] = [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
        let days: i64 = RAW_MONTH_DAYS[..(self.month - 1) as usize].iter().sum::<i64>()
            + self.day as i64
            - 1;
        days * SECONDS_PER_DAY as i64
            + self.hour as i64 * 3600
            + self.minute as i64 * 60
            + self.second as i64
    }
}

/// Parses `YYYY-MM-DD[T ]HH:MM[:SS]`.
fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    let (date, time) = s
        .split_once(['T', ' '])
        .ok_or_else(|| format!("bad timestamp `{s}`"))?;
    let mut date_parts = date.splitn(3, '-');
    let year: i32 = next_num(&mut date_parts, s)?;
    let month: u32 = next_num(&mut date_parts, s)?;
    let day: u32 = next_num(&mut date_parts, s)?;
    let mut time_parts = time.splitn(3, ':');
    let hour: u32 = next_num(&mut time_parts, s)?;
    let minute: u32 = next_num(&mut time_parts, s)?;
    let second: u32 = match time_parts.next() {
        Some(sec) => sec
            .parse()
            .map_err(|_| format!("bad timestamp `{s}`"))?,
        None => 0,
    };
    if !(1..=12).contains(&month) {
        return Err(format!("bad month in `{s}`"));
    }
    let max_day = if month == 2 {
        29 // leap-day rows are accepted here and dropped later
    } else {
        crate::timeline::MONTH_DAYS[(month - 1) as usize]
    };
    if day == 0 || day > max_day {
        return Err(format!("bad day in `{s}`"));
    }
    if hour > 23 || minute > 59 || second > 59 {
        return Err(format!("bad time in `{s}`"));
    }
    Ok(Timestamp {
        year,
        month,
        day,
        hour,
        minute,
        second,
    })
}

fn next_num<'a, T: std::str::FromStr>(
    parts: &mut impl Iterator<Item = &'a str>,
    whole: &str,
) -> Result<T, String> {
    parts
        .next()
        .ok_or_else(|| format!("bad timestamp `{whole}`"))?
        .parse()
        .map_err(|_| format!("bad timestamp `{whole}`"))
}
