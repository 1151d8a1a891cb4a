//! Multi-scale decomposition of an `n`-day window.
//!
//! A window of `n` days (a multiple of 5) becomes `C = ceil(log5 n)` sub-maps.
//! Sub-map `i` has exactly five units of `M_i = min(5^(i-1), n/5)` days each
//! and covers the most recent `5 * M_i` days, so the maps nest from the right:
//! `X_1` is the last week at daily resolution and `X_C` spans the whole window.

use serde::{Deserialize, Serialize};

use crate::chart::ChartUnit;
use crate::error::{Error, Result};

/// Units per sub-map.
pub const UNITS_PER_MAP: usize = 5;

fn check_window_len(n: usize) -> Result<()> {
    if n == 0 || n % UNITS_PER_MAP != 0 {
        return Err(Error::Domain(format!("window length {n} is not a positive multiple of 5")));
    }
    Ok(())
}

/// `ceil(log5 n)`, computed on integers.
pub fn num_submaps(n: usize) -> Result<usize> {
    check_window_len(n)?;
    let mut c = 0;
    let mut span = 1usize;
    while span < n {
        span *= 5;
        c += 1;
    }
    Ok(c)
}

/// Days per unit of sub-map `i` (1-based).
pub fn resolution(i: usize, n: usize) -> Result<usize> {
    let c = num_submaps(n)?;
    if i == 0 || i > c {
        return Err(Error::Domain(format!("sub-map index {i} outside 1..={c}")));
    }
    Ok(5usize.pow(i as u32 - 1).min(n / UNITS_PER_MAP))
}

/// Feature weight per sub-map: half on the most recent week, halving
/// thereafter, with the last map matching its predecessor so the total is 1.
pub fn feature_weights(c: usize) -> Vec<f64> {
    match c {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (1..=c)
            .map(|i| match i {
                1 => 0.5,
                i if i < c => 0.5 / 2f64.powi(i as i32 - 1),
                _ => 0.5 / 2f64.powi(c as i32 - 2),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubMap {
    /// 1-based index `i`.
    pub index: usize,
    /// Days per unit, `M_i`.
    pub resolution: usize,
    pub weight: f64,
    /// Exactly five aggregated units, oldest first. Only `X_1` keeps dates.
    pub units: Vec<ChartUnit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubMapSet {
    pub n: usize,
    pub maps: Vec<SubMap>,
}

impl SubMapSet {
    pub fn count(&self) -> usize {
        self.maps.len()
    }

    pub fn resolutions(&self) -> Vec<usize> {
        self.maps.iter().map(|m| m.resolution).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.weight).collect()
    }
}

/// Merges consecutive days into one unit: first open, max high, min low,
/// last close, summed turnover and the last day's ma5.
pub fn merge_units(days: &[ChartUnit]) -> ChartUnit {
    let first = &days[0];
    let last = &days[days.len() - 1];
    ChartUnit {
        open: first.open,
        high: days.iter().map(|d| d.high).fold(f64::NEG_INFINITY, f64::max),
        low: days.iter().map(|d| d.low).fold(f64::INFINITY, f64::min),
        close: last.close,
        turnover: days.iter().map(|d| d.turnover).sum(),
        ma5: last.ma5,
        date: None,
    }
}

/// Decomposes the last `n` units of `window` into `C` sub-maps.
pub fn decompose(window: &[ChartUnit], n: usize) -> Result<SubMapSet> {
    let c = num_submaps(n)?;
    if window.len() < n {
        return Err(Error::Domain(format!(
            "window has {} days, decomposition needs {n}",
            window.len()
        )));
    }
    let window = &window[window.len() - n..];
    let weights = feature_weights(c);
    let mut maps = Vec::with_capacity(c);
    for i in 1..=c {
        let m = resolution(i, n)?;
        let span = &window[n - UNITS_PER_MAP * m..];
        let units = if m == 1 {
            span.to_vec()
        } else {
            span.chunks_exact(m).map(merge_units).collect()
        };
        maps.push(SubMap {
            index: i,
            resolution: m,
            weight: weights[i - 1],
            units,
        });
    }
    Ok(SubMapSet { n, maps })
}
