use std::fmt::Write as _;

use super::engine::{BacktestReport, Signal};
use crate::error::{Error, Result};

pub const SIGNALS_HEADER: &str = "date,symbol,p_up,r_hat";

/// Parses `date,symbol,p_up[,r_hat]` rows; the `r_hat` column is optional.
pub fn read_signals(text: &str) -> Result<Vec<Signal>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["date", "symbol", "p_up"] && names != ["date", "symbol", "p_up", "r_hat"] {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `date,symbol,p_up[,r_hat]`, got `{}`", names.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Signal>().enumerate() {
        let line = i + 2;
        let s = row.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if !(0.0..=1.0).contains(&s.p_up) {
            return Err(Error::Parse {
                line,
                msg: format!("p_up {} outside [0, 1]", s.p_up),
            });
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_signals(signals: &[Signal]) -> String {
    let mut out = String::from(SIGNALS_HEADER);
    out.push('\n');
    for s in signals {
        let r = s.r_hat.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", s.date, s.symbol, s.p_up, r);
    }
    out
}

pub fn equity_csv(report: &BacktestReport) -> String {
    let mut out = String::from("date,equity\n");
    for p in &report.equity {
        let _ = writeln!(out, "{},{}", p.date, p.equity);
    }
    out
}
