//! Simulated time.
//!
//! Time is kept as an integer number of milli-units so that event arithmetic
//! is exact and the closed-form response time matches the event loop bit for
//! bit. Delays given as reals are rounded to the nearest milli-unit.

use std::fmt;
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimTime(u64);

pub const TICKS_PER_UNIT: u64 = 1000;

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ticks(ticks: u64) -> Self {
        SimTime(ticks)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    /// Converts a real number of time-units. Returns `None` for negative,
    /// non-finite or out-of-range input.
    pub fn from_units(units: f64) -> Option<Self> {
        if !units.is_finite() || units < 0.0 {
            return None;
        }
        let ticks = (units * TICKS_PER_UNIT as f64).round();
        if ticks > u64::MAX as f64 / 2.0 {
            return None;
        }
        Some(SimTime(ticks as u64))
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / TICKS_PER_UNIT as f64
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl Mul<u64> for SimTime {
    type Output = SimTime;
    fn mul(self, rhs: u64) -> SimTime {
        SimTime(self.0 * rhs)
    }
}

/// Renders with exactly three fractional digits, e.g. `2.500`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:03}",
            self.0 / TICKS_PER_UNIT,
            self.0 % TICKS_PER_UNIT
        )
    }
}
