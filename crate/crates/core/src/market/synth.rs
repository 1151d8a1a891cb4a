//! Synthetic daily bars for desk-scale experiments.
//!
//! Closes follow a geometric random walk whose drift can change in
//! segments. Optionally a pattern is planted in each day's candle: the body
//! is white (close above open) exactly when the close five trading days
//! later is higher, so the label of every sample is readable from its final
//! bar. A noise probability flips the candle colour at random.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{compute_ma5, DailyBar, Universe};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSegment {
    /// First trading-day index the drift applies to.
    pub start_day: usize,
    /// Mean daily log return.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub start_date: NaiveDate,
    pub start_price: f64,
    /// Mean daily log return before the first segment.
    pub drift: f64,
    /// Daily log-return standard deviation.
    pub volatility: f64,
    pub drift_segments: Vec<DriftSegment>,
    /// Probability that a weekday is a market holiday.
    pub holiday_prob: f64,
    pub turnover_mean: f64,
    /// Log-scale standard deviation of the turnover AR(1) innovations.
    pub turnover_vol: f64,
    pub float_shares: f64,
    /// Wick length as a fraction of price, scaled by |N(0,1)|.
    pub wick: f64,
    /// Plant the candle-colour pattern over `horizon` days.
    pub planted: bool,
    pub planted_horizon: usize,
    /// Probability of flipping a planted candle.
    pub noise: f64,
    /// Candle body size range as a fraction of close.
    pub body_min: f64,
    pub body_max: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2015, 1, 5).unwrap(),
            start_price: 20.0,
            drift: 0.0,
            volatility: 0.02,
            drift_segments: Vec::new(),
            holiday_prob: 0.02,
            turnover_mean: 0.02,
            turnover_vol: 0.3,
            float_shares: 1.0e8,
            wick: 0.005,
            planted: true,
            planted_horizon: 5,
            noise: 0.0,
            body_min: 0.01,
            body_max: 0.03,
        }
    }
}

impl SynthParams {
    fn drift_at(&self, day: usize) -> f64 {
        self.drift_segments
            .iter()
            .filter(|s| s.start_day <= day)
            .max_by_key(|s| s.start_day)
            .map_or(self.drift, |s| s.drift)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn trading_calendar(rng: &mut ChaCha8Rng, start: NaiveDate, days: usize, holiday_prob: f64) -> Vec<NaiveDate> {
    let mut dates = Vec::with_capacity(days);
    let mut d = start;
    while dates.len() < days {
        let weekend = matches!(d.weekday(), Weekday::Sat | Weekday::Sun);
        if !weekend && !(holiday_prob > 0.0 && rng.random_bool(holiday_prob)) {
            dates.push(d);
        }
        d = d + Days::new(1);
    }
    dates
}

/// Generates `days` bars, deterministic in `seed`.
pub fn synth_series(seed: u64, days: usize, params: &SynthParams) -> Result<Vec<DailyBar>> {
    if days < 80 {
        return Err(Error::Domain(format!("synthetic series needs at least 80 days, got {days}")));
    }
    if !(params.start_price > 0.0) || params.volatility < 0.0 || !(0.0..=1.0).contains(&params.noise) {
        return Err(Error::Domain("invalid synthetic series parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut closes = Vec::with_capacity(days);
    let mut c = params.start_price;
    for day in 0..days {
        if day > 0 {
            c *= (params.drift_at(day) + params.volatility * normal(&mut rng)).exp();
        }
        closes.push(c);
    }

    let mut turnover_log = 0.0;
    let mut raw = Vec::with_capacity(days);
    for day in 0..days {
        let close = closes[day];
        let open = if params.planted {
            let h = params.planted_horizon.max(1);
            let mut up = match closes.get(day + h) {
                Some(&future) => future > close,
                None => normal(&mut rng) > 0.0,
            };
            if params.noise > 0.0 && rng.random_bool(params.noise) {
                up = !up;
            }
            let body = rng.random_range(params.body_min..=params.body_max.max(params.body_min));
            if up {
                close * (1.0 - body)
            } else {
                close * (1.0 + body)
            }
        } else {
            let prev = if day == 0 { close } else { closes[day - 1] };
            prev * (1.0 + 0.25 * params.volatility * normal(&mut rng))
        };
        let high = open.max(close) * (1.0 + params.wick * normal(&mut rng).abs());
        let low = open.min(close) * (1.0 - params.wick * normal(&mut rng).abs());
        turnover_log = 0.7 * turnover_log + params.turnover_vol * normal(&mut rng);
        let turnover_rate = params.turnover_mean * turnover_log.exp();
        raw.push((open, high, low, close, turnover_rate));
    }

    let dates = trading_calendar(&mut rng, params.start_date, days, params.holiday_prob);
    let mut bars: Vec<DailyBar> = raw
        .into_iter()
        .zip(dates)
        .map(|((open, high, low, close, turnover_rate), date)| DailyBar {
            date,
            open,
            high,
            low,
            close,
            volume: (turnover_rate * params.float_shares).round(),
            turnover_rate,
            ma5: None,
        })
        .collect();
    compute_ma5(&mut bars);
    Ok(bars)
}

/// `symbols` independent series named `SYN000`, `SYN001`, ... with start
/// prices spread over 5..50.
pub fn synth_universe(seed: u64, symbols: usize, days: usize, params: &SynthParams) -> Result<Universe> {
    let mut prices = ChaCha8Rng::seed_from_u64(seed);
    let mut universe = Universe::new();
    for i in 0..symbols {
        let symbol_seed = seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let p = SynthParams {
            start_price: prices.random_range(5.0..50.0),
            ..params.clone()
        };
        universe.insert(format!("SYN{i:03}"), synth_series(symbol_seed, days, &p)?);
    }
    Ok(universe)
}
