use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DailyBar;
use crate::chart::{layout_columns, ChartGeometry};
use crate::multiscale::UNITS_PER_MAP;
use crate::error::{Error, Result};

/// Trading days in the sequence-feature window.
pub const SEQ_LEN: usize = 30;

pub fn round_to_cent(price: f64) -> f64 {
    (price * 100.0).round() / 100.0
}

/// True when `close` reached the daily upper limit set from `prev_close`.
///
/// The limit price is `prev_close * (1 + limit)` rounded to the cent. Prices
/// in synthetic data are not cent-quantized, so the comparison allows 1e-9 of
/// floating-point slack.
pub fn is_limit_up(prev_close: f64, close: f64, limit: f64) -> Result<bool> {
    if !(prev_close > 0.0 && close > 0.0) {
        return Err(Error::Domain(format!(
            "limit-up check needs positive prices, got prev_close={prev_close} close={close}"
        )));
    }
    if !(limit > 0.0 && limit < 1.0) {
        return Err(Error::Domain(format!("limit ratio {limit} outside (0, 1)")));
    }
    let limit_price = round_to_cent(prev_close * (1.0 + limit));
    Ok(close >= limit_price - 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    /// Image window length in trading days, a positive multiple of 5.
    pub n: usize,
    /// Label horizon in trading days.
    pub horizon: usize,
    /// Daily price limit ratio (0.10 for main-board stocks, 0.05 for ST).
    pub limit: f64,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            n: 20,
            horizon: 5,
            limit: 0.10,
        }
    }
}

impl SampleParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 5 != 0 {
            return Err(Error::Domain(format!(
                "window length {} is not a positive multiple of 5",
                self.n
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        if !(self.limit > 0.0 && self.limit < 1.0) {
            return Err(Error::Domain(format!(
                "limit ratio {} outside (0, 1)",
                self.limit
            )));
        }
        Ok(())
    }
}

/// A labelled training example ending on trading day `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub symbol: String,
    /// The last `n` bars up to and including `t`.
    pub window: Vec<DailyBar>,
    /// The last [`SEQ_LEN`] bars up to and including `t`.
    pub seq_window: Vec<DailyBar>,
    /// Close of the bar preceding `seq_window`, used for the day-1 ratios.
    pub seq_prev_close: f64,
    /// 1 iff `r > 0`.
    pub y: u8,
    /// Forward close-to-close return over the horizon.
    pub r: f64,
    /// Date of the bar the label is read from (`t + horizon`).
    pub label_date: NaiveDate,
}

impl Sample {
    pub fn end_date(&self) -> NaiveDate {
        self.window.last().expect("sample window is never empty").date
    }

    /// Earliest date any input feature reads from.
    pub fn first_input_date(&self) -> NaiveDate {
        self.window[0].date.min(self.seq_window[0].date)
    }
}

/// Cuts one sample per eligible end day from a single symbol's bars.
///
/// End days are skipped when there is not enough history or future, when
/// any bar in either window lacks `ma5`, when the final bar closed at the
/// upper limit, or when the last five days hold more calendar gaps than the
/// fixed-width dated chart has separator room for. Short series yield an
/// empty result.
pub fn make_samples(symbol: &str, bars: &[DailyBar], params: &SampleParams) -> Result<Vec<Sample>> {
    params.validate()?;
    let n = params.n;
    let first = (n - 1).max(SEQ_LEN);
    let mut out = Vec::new();
    if bars.len() <= first + params.horizon {
        return Ok(out);
    }
    for t in first..bars.len() - params.horizon {
        let window = &bars[t + 1 - n..=t];
        let seq_window = &bars[t + 1 - SEQ_LEN..=t];
        if window.iter().chain(seq_window).any(|b| b.ma5.is_none()) {
            continue;
        }
        if is_limit_up(bars[t - 1].close, bars[t].close, params.limit)? {
            continue;
        }
        let finest: Vec<NaiveDate> = bars[t + 1 - UNITS_PER_MAP..=t].iter().map(|b| b.date).collect();
        if layout_columns(&finest, ChartGeometry::dated_width(UNITS_PER_MAP)).is_err() {
            log::debug!("{symbol} {}: too many calendar gaps for the dated chart", bars[t].date);
            continue;
        }
        let close = bars[t].close;
        let future = &bars[t + params.horizon];
        let r = (future.close - close) / close;
        out.push(Sample {
            symbol: symbol.to_string(),
            window: window.to_vec(),
            seq_window: seq_window.to_vec(),
            seq_prev_close: bars[t - SEQ_LEN].close,
            y: u8::from(r > 0.0),
            r,
            label_date: future.date,
        });
    }
    Ok(out)
}


/// [`make_samples`] over every symbol, in symbol order.
pub fn universe_samples(universe: &super::Universe, params: &SampleParams) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (symbol, bars) in universe {
        out.extend(make_samples(symbol, bars, params)?);
    }
    Ok(out)
}
