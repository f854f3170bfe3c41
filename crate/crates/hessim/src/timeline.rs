//! Calendar arithmetic for the fixed 365-day simulation year.
//!
//! The simulation indexes time as minute-of-year on a uniform grid with no
//! leap day: minute 0 is Jan 1 00:00, minute 525,599 is Dec 31 23:59.

use serde::{Deserialize, Serialize};

pub const MINUTES_PER_DAY: u32 = 1_440;
pub const DAYS_PER_YEAR: u32 = 365;
pub const SECONDS_PER_DAY: u32 = 86_400;

/// Days in each month of the fixed (non-leap) year.
pub const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// First day-of-year (0-based) of the summer season: April 1.
pub const SUMMER_START_DAY: u32 = 31 + 28 + 31;
/// First day-of-year (0-based) after the summer season: October 1.
pub const SUMMER_END_DAY: u32 = SUMMER_START_DAY + 30 + 31 + 30 + 31 + 31 + 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Season {
    /// April 1 through September 30.
    Summer,
    /// October 1 through March 31.
    Winter,
}

impl Season {
    pub fn of_day(day_of_year: u32) -> Season {
        if (SUMMER_START_DAY..SUMMER_END_DAY).contains(&day_of_year) {
            Season::Summer
        } else {
            Season::Winter
        }
    }
}

/// A daily clock interval in minutes-of-day, possibly wrapping midnight.
///
/// `start == end` is the degenerate empty window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteWindow {
    pub start_minute: u32,
    pub end_minute: u32,
}

impl MinuteWindow {
    pub fn new(start_minute: u32, end_minute: u32) -> Self {
        Self {
            start_minute,
            end_minute,
        }
    }

    /// The default bi-hourly off-peak window, 22:00-08:00.
    pub fn default_offpeak() -> Self {
        Self::new(22 * 60, 8 * 60)
    }

    pub fn contains(&self, minute_of_day: u32) -> bool {
        if self.start_minute <= self.end_minute {
            (self.start_minute..self.end_minute).contains(&minute_of_day)
        } else {
            minute_of_day >= self.start_minute || minute_of_day < self.end_minute
        }
    }

    /// Window length in minutes per day.
    pub fn duration_minutes(&self) -> u32 {
        if self.start_minute <= self.end_minute {
            self.end_minute - self.start_minute
        } else {
            MINUTES_PER_DAY - self.start_minute + self.end_minute
        }
    }

    pub fn is_valid(&self) -> bool {
        self.start_minute < MINUTES_PER_DAY && self.end_minute < MINUTES_PER_DAY
    }
}

/// Day-of-year (0-based, no leap day) for a calendar date. `None` for Feb 29.
pub fn day_of_year(month: u32, day: u32) -> Option<u32> {
    if month == 2 && day == 29 {
        return None;
    }
    let days: u32 = MONTH_DAYS[..(month - 1) as usize].iter().sum();
    Some(days + day - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn season_boundaries() {
        assert_eq!(Season::of_day(0), Season::Winter); // Jan 1
        assert_eq!(Season::of_day(SUMMER_START_DAY - 1), Season::Winter); // Mar 31
        assert_eq!(Season::of_day(SUMMER_START_DAY), Season::Summer); // Apr 1
        assert_eq!(Season::of_day(SUMMER_END_DAY - 1), Season::Summer); // Sep 30
        assert_eq!(Season::of_day(SUMMER_END_DAY), Season::Winter); // Oct 1
        assert_eq!(Season::of_day(364), Season::Winter); // Dec 31
    }

    #[test]
    fn summer_is_183_days() {
        assert_eq!(SUMMER_END_DAY - SUMMER_START_DAY, 183);
        assert_eq!(SUMMER_START_DAY, 90);
    }

    #[test]
    fn offpeak_window_wraps_midnight() {
        let w = MinuteWindow::default_offpeak();
        assert!(w.contains(22 * 60));
        assert!(w.contains(23 * 60 + 59));
        assert!(w.contains(0));
        assert!(w.contains(7 * 60 + 59));
        assert!(!w.contains(8 * 60));
        assert!(!w.contains(12 * 60));
        assert_eq!(w.duration_minutes(), 10 * 60);
    }

    #[test]
    fn non_wrapping_window() {
        let w = MinuteWindow::new(8 * 60, 22 * 60);
        assert!(w.contains(8 * 60));
        assert!(!w.contains(22 * 60));
        assert_eq!(w.duration_minutes(), 14 * 60);
    }

    #[test]
    fn day_of_year_table() {
        assert_eq!(day_of_year(1, 1), Some(0));
        assert_eq!(day_of_year(2, 28), Some(58));
        assert_eq!(day_of_year(2, 29), None);
        assert_eq!(day_of_year(3, 1), Some(59));
        assert_eq!(day_of_year(4, 1), Some(90));
        assert_eq!(day_of_year(12, 31), Some(364));
    }
}
