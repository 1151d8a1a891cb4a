//! The 30x12 sequence matrix fed to the time-series branch.
//!
//! Column order: close, open, high, low, ma5, turnover_rate, month, week,
//! close_ratio, open_ratio, high_ratio, low_ratio. The five price columns are
//! divided by the last day's close; turnover passes through unscaled; month
//! is `month / 12` and week is `weekday / 5` with Monday = 1.

use chrono::{Datelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DailyBar, SEQ_LEN};

pub const SEQ_FEATURES: usize = 12;

pub mod col {
    pub const CLOSE: usize = 0;
    pub const OPEN: usize = 1;
    pub const HIGH: usize = 2;
    pub const LOW: usize = 3;
    pub const MA5: usize = 4;
    pub const TURNOVER: usize = 5;
    pub const MONTH: usize = 6;
    pub const WEEK: usize = 7;
    pub const CLOSE_RATIO: usize = 8;
    pub const OPEN_RATIO: usize = 9;
    pub const HIGH_RATIO: usize = 10;
    pub const LOW_RATIO: usize = 11;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMatrix {
    pub values: Vec<[f64; SEQ_FEATURES]>,
    /// Raw close of the last day, the price normalizer.
    pub anchor_close: f64,
}

/// Returns `(close, open, high, low)` relative to the previous close.
pub fn compute_ratios(prev_close: f64, open: f64, high: f64, low: f64, close: f64) -> Result<(f64, f64, f64, f64)> {
    if !(prev_close > 0.0) {
        return Err(Error::Domain(format!("previous close must be positive, got {prev_close}")));
    }
    let ratio = |x: f64| (x - prev_close) / prev_close;
    Ok((ratio(close), ratio(open), ratio(high), ratio(low)))
}

fn week_index(day: Weekday) -> Option<f64> {
    match day {
        Weekday::Mon => Some(1.0),
        Weekday::Tue => Some(2.0),
        Weekday::Wed => Some(3.0),
        Weekday::Thu => Some(4.0),
        Weekday::Fri => Some(5.0),
        Weekday::Sat | Weekday::Sun => None,
    }
}

/// Builds the matrix from [`SEQ_LEN`] bars; `prev_close` is the close of
/// the bar before the first one.
pub fn build_matrix(prev_close: f64, bars: &[DailyBar]) -> Result<SequenceMatrix> {
    if bars.len() != SEQ_LEN {
        return Err(Error::Feature(format!("sequence window needs {SEQ_LEN} bars, got {}", bars.len())));
    }
    let anchor = bars[SEQ_LEN - 1].close;
    if !(anchor > 0.0) {
        return Err(Error::Domain(format!("anchor close must be positive, got {anchor}")));
    }
    let mut values = Vec::with_capacity(SEQ_LEN);
    let mut prev = prev_close;
    for bar in bars {
        let ma5 = bar
            .ma5
            .ok_or_else(|| Error::Feature(format!("bar on {} has no ma5", bar.date)))?;
        let week = week_index(bar.date.weekday()).ok_or_else(|| Error::Validation {
            date: bar.date,
            msg: "trading bar falls on a weekend".into(),
        })?;
        let (cr, or, hr, lr) = compute_ratios(prev, bar.open, bar.high, bar.low, bar.close)?;
        let mut row = [0.0; SEQ_FEATURES];
        row[col::CLOSE] = bar.close / anchor;
        row[col::OPEN] = bar.open / anchor;
        row[col::HIGH] = bar.high / anchor;
        row[col::LOW] = bar.low / anchor;
        row[col::MA5] = ma5 / anchor;
        row[col::TURNOVER] = bar.turnover_rate;
        row[col::MONTH] = bar.date.month() as f64 / 12.0;
        row[col::WEEK] = week / 5.0;
        row[col::CLOSE_RATIO] = cr;
        row[col::OPEN_RATIO] = or;
        row[col::HIGH_RATIO] = hr;
        row[col::LOW_RATIO] = lr;
        if let Some(k) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Feature(format!("non-finite feature in column {k} on {}", bar.date)));
        }
        values.push(row);
        prev = bar.close;
    }
    Ok(SequenceMatrix {
        values,
        anchor_close: anchor,
    })
}

impl SequenceMatrix {
    /// Row-major `[30, 12, 1]` data for the time-series block.
    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}
