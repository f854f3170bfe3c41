//! Bundled synthetic sample profiles.
//!
//! One representative week (five working days plus a weekend, with one
//! overcast day) tiled across the 365-day year. The shapes are closed-form
//! and fully deterministic; they exist so the simulator runs out of the box
//! and tests have a realistic driver. They are synthetic, not measured data.

use crate::profiles::{MinuteSeries, ProfileKind};
use crate::timeline::MINUTES_PER_DAY;
use crate::MINUTES_PER_YEAR;

/// Peak PV power per weekday archetype, W (plant is just under 10 kWp).
const PV_DAY_PEAK_W: [f64; 7] = [
    7_900.0, 8_300.0, 2_600.0, 6_400.0, 7_600.0, 8_100.0, 5_200.0,
];

/// Daylight window, minutes of day.
const SUNRISE_MIN: f64 = 6.5 * 60.0;
const SUNSET_MIN: f64 = 19.5 * 60.0;

/// PV power at a minute of the given weekday archetype.
pub fn pv_w(day_of_week: usize, minute_of_day: u32) -> f64 {
    let m = f64::from(minute_of_day);
    if !(SUNRISE_MIN..SUNSET_MIN).contains(&m) {
        return 0.0;
    }
    let x = (m - SUNRISE_MIN) / (SUNSET_MIN - SUNRISE_MIN);
    let bell = (std::f64::consts::PI * x).sin().powi(2);
    let mut p = PV_DAY_PEAK_W[day_of_week % 7] * bell;
    if day_of_week % 7 == 3 {
        // A passing cloud front early in the afternoon.
        let d = (m - 13.2 * 60.0) / 55.0;
        p *= 1.0 - 0.55 * (-d * d).exp();
    }
    p
}

/// Services-building load at a minute of the given weekday archetype, W.
pub fn load_w(day_of_week: usize, minute_of_day: u32) -> f64 {
    let m = f64::from(minute_of_day);
    let base = 340.0;
    let workday = day_of_week % 7 < 5;
    if workday {
        let ramp_up = smooth_step(m, 7.0 * 60.0, 9.0 * 60.0);
        let ramp_down = 1.0 - smooth_step(m, 17.5 * 60.0, 20.5 * 60.0);
        let occupancy = ramp_up * ramp_down;
        let lunch = 700.0 * gauss(m, 13.0 * 60.0, 70.0);
        base + 2_900.0 * occupancy + lunch * occupancy
    } else {
        // Weekend: ventilation and a small daytime presence.
        base + 650.0 * smooth_step(m, 9.0 * 60.0, 11.0 * 60.0)
            * (1.0 - smooth_step(m, 18.0 * 60.0, 20.0 * 60.0))
    }
}

fn smooth_step(x: f64, lo: f64, hi: f64) -> f64 {
    let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn gauss(x: f64, center: f64, width: f64) -> f64 {
    let d = (x - center) / width;
    (-d * d).exp()
}

/// The default synthetic pair (PV, load) for one year.
pub fn synthetic_year() -> (MinuteSeries, MinuteSeries) {
    synthetic_year_scaled(1.0, 1.0)
}

/// Synthetic pair with the PV and load shapes scaled; used to derive profile
/// variants for tests and explorations.
pub fn synthetic_year_scaled(pv_scale: f64, load_scale: f64) -> (MinuteSeries, MinuteSeries) {
    let mut pv = Vec::with_capacity(MINUTES_PER_YEAR);
    let mut load = Vec::with_capacity(MINUTES_PER_YEAR);
    for day in 0..365usize {
        let dow = day % 7;
        for minute in 0..MINUTES_PER_DAY {
            pv.push(pv_w(dow, minute) * pv_scale);
            load.push(load_w(dow, minute) * load_scale);
        }
    }
    (
        MinuteSeries::new(pv, ProfileKind::Pv).expect("synthetic PV is well-formed"),
        MinuteSeries::new(load, ProfileKind::Load).expect("synthetic load is well-formed"),
    )
}

/// Writes a synthetic series as a profile CSV (1-minute native step).
pub fn write_profile_csv(series: &MinuteSeries, mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "timestamp,power_w")?;
    let mut minute_of_year = 0u32;
    for (month, &mdays) in crate::timeline::MONTH_DAYS.iter().enumerate() {
        for day in 1..=mdays {
            for minute_of_day in 0..MINUTES_PER_DAY {
                let v = series.values()[minute_of_year as usize];
                writeln!(
                    w,
                    "2019-{:02}-{:02}T{:02}:{:02}:00,{}",
                    month + 1,
                    day,
                    minute_of_day / 60,
                    minute_of_day % 60,
                    v
                )?;
                minute_of_year += 1;
            }
        }
    }
    Ok(())
}
