//! Runs the slot-based backtest on a small hand-made market and prints the
//! order book, the trades and the equity curve.
//!
//! cargo run --example backtest_ledger

use chrono::{Datelike, Days, NaiveDate};
use msr_cnn::backtest::{run_backtest, BacktestConfig, Signal};
use msr_cnn::market::{DailyBar, Universe};

fn main() -> msr_cnn::Result<()> {
    let mut dates = Vec::new();
    let mut d = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
    while dates.len() < 12 {
        if d.weekday().number_from_monday() <= 5 {
            dates.push(d);
        }
        d = d + Days::new(1);
    }
    let paths: [(&str, f64, f64); 3] = [("AAA", 10.0, 0.02), ("BBB", 40.0, -0.01), ("CCC", 8.0, 0.005)];
    let mut prices = Universe::new();
    for (symbol, start, step) in paths {
        let bars = dates
            .iter()
            .enumerate()
            .map(|(k, &date)| {
                let open = start * (1.0 + step).powi(k as i32);
                let close = open * (1.0 + step / 2.0);
                DailyBar {
                    date,
                    open,
                    high: open.max(close) * 1.01,
                    low: open.min(close) * 0.99,
                    close,
                    volume: 1e5,
                    turnover_rate: 0.01,
                    ma5: None,
                }
            })
            .collect();
        prices.insert(symbol.to_string(), bars);
    }
    let signal = |k: usize, symbol: &str, p_up: f64| Signal {
        date: dates[k],
        symbol: symbol.into(),
        p_up,
        r_hat: None,
    };
    let signals = vec![
        signal(0, "AAA", 0.91),
        signal(0, "BBB", 0.86),
        signal(0, "CCC", 0.75),
        signal(3, "CCC", 0.88),
        signal(6, "BBB", 0.95),
    ];
    let config = BacktestConfig {
        max_positions: 2,
        hold_days: 3,
        initial_capital: 100_000.0,
        ..BacktestConfig::default()
    };
    let report = run_backtest(&signals, &prices, &config)?;
    for o in &report.orders {
        println!("order  {} {} p_up {:.2} -> slot {}", o.signal_date, o.symbol, o.p_up, o.slot);
    }
    for t in &report.trades {
        println!(
            "trade  {} slot {}: {} @ {:.3} -> {} @ {:.3}, net {:+.4}, pnl {:+.2}",
            t.symbol, t.slot, t.entry_date, t.entry_price, t.exit_date, t.exit_price, t.net_return, t.pnl
        );
    }
    for p in &report.equity {
        println!("equity {} {:.2}", p.date, p.equity);
    }
    println!("PF {:+.4}, MDD {:.4}", report.summary.pf, report.summary.mdd);
    Ok(())
}
