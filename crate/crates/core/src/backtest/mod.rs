//! Classification metrics, drawdowns and the portfolio simulator.

mod engine;
mod io;
mod metrics;

pub use engine::{
    run_backtest, BacktestConfig, BacktestReport, BacktestSummary, EquityPoint, Order, Signal, Trade,
};
pub use io::{equity_csv, read_signals, write_signals, SIGNALS_HEADER};
pub use metrics::{index_metrics, max_drawdown, ppv_npv, Confusion, IndexMetrics, PpvNpv};
