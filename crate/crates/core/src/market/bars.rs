use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "symbol",
    "date",
    "open",
    "high",
    "low",
    "close",
    "volume",
    "turnover_rate",
];

/// One trading day. Prices are assumed pre-adjusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    pub turnover_rate: f64,
    /// Mean of this and the previous four closes; absent for the first four bars.
    pub ma5: Option<f64>,
}

impl DailyBar {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Error::Validation {
            date: self.date,
            msg,
        };
        for (name, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(format!("{name} must be a positive price, got {v}")));
            }
        }
        if self.low > self.open.min(self.close) {
            return Err(invalid(format!(
                "low {} above min(open, close) {}",
                self.low,
                self.open.min(self.close)
            )));
        }
        if self.high < self.open.max(self.close) {
            return Err(invalid(format!(
                "high {} below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            )));
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(invalid(format!("volume must be >= 0, got {}", self.volume)));
        }
        if !(self.turnover_rate.is_finite() && self.turnover_rate >= 0.0) {
            return Err(invalid(format!(
                "turnover_rate must be >= 0, got {}",
                self.turnover_rate
            )));
        }
        Ok(())
    }
}

/// Bars per symbol, each series ascending by date.
pub type Universe = BTreeMap<String, Vec<DailyBar>>;

/// Fills `ma5` for every bar with four predecessors and clears it elsewhere.
pub fn compute_ma5(bars: &mut [DailyBar]) {
    for i in 0..bars.len() {
        bars[i].ma5 = if i >= 4 {
            let sum = bars[i - 4].close
                + bars[i - 3].close
                + bars[i - 2].close
                + bars[i - 1].close
                + bars[i].close;
            Some(sum / 5.0)
        } else {
            None
        };
    }
}

#[derive(Deserialize)]
struct CsvRow {
    symbol: String,
    date: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: f64,
    turnover_rate: f64,
}

/// Parses `symbol,date,open,high,low,close,volume,turnover_rate` rows.
///
/// Rows may arrive in any order; each symbol's bars come back sorted by date
/// with `ma5` filled in.
pub fn parse_bars(text: &str) -> Result<Universe> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header `{}`, got `{}`",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut universe = Universe::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let row: CsvRow = record.deserialize(None).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            msg: format!("bad date `{}`: {e}", row.date),
        })?;
        let bar = DailyBar {
            date,
            open: row.open,
            high: row.high,
            low: row.low,
            close: row.close,
            volume: row.volume,
            turnover_rate: row.turnover_rate,
            ma5: None,
        };
        bar.validate()?;
        universe.entry(row.symbol).or_insert_with(Vec::new).push(bar);
    }

    for (symbol, bars) in universe.iter_mut() {
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Duplicate {
                symbol: symbol.clone(),
                date: w[0].date,
            });
        }
        compute_ma5(bars);
    }
    Ok(universe)
}

/// Serializes a universe in the ingest schema. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_bars_csv(universe: &Universe) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for (symbol, bars) in universe {
        for b in bars {
            out.push_str(&format!(
                "{symbol},{},{},{},{},{},{},{}\n",
                b.date.format("%Y-%m-%d"),
                b.open,
                b.high,
                b.low,
                b.close,
                b.volume,
                b.turnover_rate
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_with_closes(closes: &[f64]) -> String {
        let mut s = CSV_HEADER.join(",") + "\n";
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        for (i, c) in closes.iter().enumerate() {
            let d = start + chrono::Days::new(i as u64);
            s += &format!("AAA,{d},{c},{c},{c},{c},1000,0.01\n");
        }
        s
    }

    #[test]
    fn ma5_of_one_to_five_is_three() {
        let u = parse_bars(&csv_with_closes(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let bars = &u["AAA"];
        assert_eq!(bars[4].ma5, Some(3.0));
        assert!(bars[..4].iter().all(|b| b.ma5.is_none()));
    }

    #[test]
    fn four_rows_have_no_ma5() {
        let u = parse_bars(&csv_with_closes(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(u["AAA"].iter().all(|b| b.ma5.is_none()));
    }

    #[test]
    fn high_below_low_is_rejected() {
        let text = CSV_HEADER.join(",") + "\nAAA,2024-01-02,10,9,11,10,100,0.01\n";
        match parse_bars(&text) {
            Err(Error::Validation { date, .. }) => {
                assert_eq!(date, NaiveDate::from_ymd_opt(2024, 1, 2).unwrap())
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = CSV_HEADER.join(",")
            + "\nAAA,2024-01-02,10,10,10,10,100,0.01\nAAA,2024-01-03,ten,10,10,10,100,0.01\n";
        match parse_bars(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_date_and_header_are_parse_errors() {
        let text = CSV_HEADER.join(",") + "\nAAA,2024/01/02,10,10,10,10,100,0.01\n";
        assert!(matches!(parse_bars(&text), Err(Error::Parse { line: 2, .. })));
        let text = "symbol,date,open,high,low,close,volume\n";
        assert!(matches!(parse_bars(text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicate_dates_are_rejected() {
        let text = CSV_HEADER.join(",")
            + "\nAAA,2024-01-02,10,10,10,10,100,0.01\nAAA,2024-01-02,11,11,11,11,100,0.01\n";
        assert!(matches!(parse_bars(&text), Err(Error::Duplicate { .. })));
    }

    #[test]
    fn rows_are_sorted_and_grouped_by_symbol() {
        let text = CSV_HEADER.join(",")
            + "\nBBB,2024-01-03,5,5,5,5,1,0.1\nAAA,2024-01-03,2,2,2,2,1,0.1\nAAA,2024-01-02,1,1,1,1,1,0.1\n";
        let u = parse_bars(&text).unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!(u["AAA"][0].close, 1.0);
        assert_eq!(u["AAA"][1].close, 2.0);
    }

    #[test]
    fn csv_writer_round_trips() {
        let u = parse_bars(&csv_with_closes(&[1.1, 2.25, 3.0, 4.125, 5.5, 6.0])).unwrap();
        assert_eq!(parse_bars(&write_bars_csv(&u)).unwrap(), u);
    }
}
