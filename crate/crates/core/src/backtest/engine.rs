use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use super::metrics::max_drawdown;
use crate::error::{Error, Result};
use crate::market::{DailyBar, Universe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub max_positions: usize,
    /// Signals must exceed this probability of "up" to enter.
    pub entry_threshold: f64,
    /// Trading days between the entry open and the exit open.
    pub hold_days: usize,
    /// Round-trip cost, deducted once at exit.
    pub cost: f64,
    pub initial_capital: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            max_positions: 5,
            entry_threshold: 0.80,
            hold_days: 5,
            cost: 0.003,
            initial_capital: 1_000_000.0,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.entry_threshold > 0.0 && self.entry_threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1)", self.entry_threshold)));
        }
        if !(self.cost >= 0.0 && self.cost < 0.1) {
            return Err(Error::Config(format!("cost {} outside [0, 0.1)", self.cost)));
        }
        if self.max_positions == 0 || self.hold_days == 0 {
            return Err(Error::Config("max_positions and hold_days must be at least 1".into()));
        }
        if !(self.initial_capital > 0.0 && self.initial_capital.is_finite()) {
            return Err(Error::Config("initial capital must be positive".into()));
        }
        Ok(())
    }
}

/// A model's view of one symbol after the close of `date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub date: NaiveDate,
    pub symbol: String,
    pub p_up: f64,
    #[serde(default)]
    pub r_hat: Option<f64>,
}

/// An entry decided at the close of `signal_date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub signal_date: NaiveDate,
    pub symbol: String,
    pub p_up: f64,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub symbol: String,
    pub slot: usize,
    pub entry_date: NaiveDate,
    pub entry_price: f64,
    pub exit_date: NaiveDate,
    pub exit_price: f64,
    /// `exit / entry * (1 - cost) - 1`.
    pub net_return: f64,
    /// Cash gained or lost by the slot.
    pub pnl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub date: NaiveDate,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSummary {
    /// Total profit fraction, `equity[last] / equity[0] - 1`.
    pub pf: f64,
    pub mdd: f64,
    pub trades: usize,
    pub winning_trades: usize,
    pub skipped_entries: usize,
    pub final_equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub summary: BacktestSummary,
    pub equity: Vec<EquityPoint>,
    pub orders: Vec<Order>,
    pub trades: Vec<Trade>,
}

#[derive(Debug, Clone)]
enum Slot {
    Idle,
    Pending {
        symbol: String,
        entry_idx: usize,
    },
    Holding {
        symbol: String,
        shares: f64,
        cost_basis: f64,
        entry_date: NaiveDate,
        entry_price: f64,
        exit_idx: usize,
    },
}

impl Slot {
    fn symbol(&self) -> Option<&str> {
        match self {
            Slot::Idle => None,
            Slot::Pending { symbol, .. } | Slot::Holding { symbol, .. } => Some(symbol),
        }
    }
}

/// Replays the signal stream day by day over the union of all trading
/// dates, starting from the first signal.
///
/// At each open, positions due (or overdue) are sold, then entries decided
/// at the previous close are bought. At each close, signals above the
/// threshold fill free slots in descending probability (symbol order breaks
/// ties), skipping symbols already held or pending. Entries whose exit would
/// fall past the last calendar day are not placed. Each slot starts with
/// `initial_capital / max_positions` and compounds on its own. Exits delayed
/// by missing prices past the final day are closed at the last known close.
pub fn run_backtest(signals: &[Signal], prices: &Universe, config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let start = signals.iter().map(|s| s.date).min();
    let calendar: Vec<NaiveDate> = prices
        .values()
        .flat_map(|bars| bars.iter().map(|b| b.date))
        .filter(|d| start.is_none_or(|s| *d >= s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if calendar.is_empty() {
        return Err(Error::Domain("backtest needs at least one price bar".into()));
    }
    let day_index: HashMap<NaiveDate, usize> = calendar.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let bars: HashMap<&str, BTreeMap<NaiveDate, &DailyBar>> = prices
        .iter()
        .map(|(s, bars)| (s.as_str(), bars.iter().map(|b| (b.date, b)).collect()))
        .collect();

    let mut by_day: Vec<Vec<&Signal>> = vec![Vec::new(); calendar.len()];
    for s in signals {
        let idx = *day_index
            .get(&s.date)
            .ok_or_else(|| Error::Domain(format!("signal date {} is not a trading day", s.date)))?;
        if !(s.p_up >= 0.0 && s.p_up <= 1.0) {
            return Err(Error::Domain(format!("p_up {} for {} on {} outside [0, 1]", s.p_up, s.symbol, s.date)));
        }
        if !bars.contains_key(s.symbol.as_str()) {
            warn!("signal for unknown symbol {} ignored", s.symbol);
            continue;
        }
        by_day[idx].push(s);
    }
    for day in &mut by_day {
        day.sort_by(|a, b| b.p_up.total_cmp(&a.p_up).then_with(|| a.symbol.cmp(&b.symbol)));
    }

    let slot_capital = config.initial_capital / config.max_positions as f64;
    let mut cash = vec![slot_capital; config.max_positions];
    let mut slots = vec![Slot::Idle; config.max_positions];
    let mut orders = Vec::new();
    let mut trades = Vec::new();
    let mut equity = Vec::with_capacity(calendar.len());
    let mut skipped = 0;
    let last_close = |symbol: &str, upto: NaiveDate| -> Option<f64> {
        bars[symbol].range(..=upto).next_back().map(|(_, b)| b.close)
    };

    for (d, &date) in calendar.iter().enumerate() {
        for (k, slot) in slots.iter_mut().enumerate() {
            if let Slot::Holding {
                symbol,
                shares,
                cost_basis,
                entry_date,
                entry_price,
                exit_idx,
            } = slot
            {
                if *exit_idx > d {
                    continue;
                }
                let Some(bar) = bars[symbol.as_str()].get(&date) else {
                    warn!("{symbol}: no price on {date}, exit deferred");
                    continue;
                };
                let proceeds = *shares * bar.open * (1.0 - config.cost);
                trades.push(Trade {
                    symbol: symbol.clone(),
                    slot: k,
                    entry_date: *entry_date,
                    entry_price: *entry_price,
                    exit_date: date,
                    exit_price: bar.open,
                    net_return: bar.open / *entry_price * (1.0 - config.cost) - 1.0,
                    pnl: proceeds - *cost_basis,
                });
                cash[k] = proceeds;
                *slot = Slot::Idle;
            }
        }
        for (k, slot) in slots.iter_mut().enumerate() {
            if let Slot::Pending { symbol, entry_idx } = slot {
                debug_assert_eq!(*entry_idx, d);
                match bars[symbol.as_str()].get(&date) {
                    Some(bar) => {
                        *slot = Slot::Holding {
                            symbol: symbol.clone(),
                            shares: cash[k] / bar.open,
                            cost_basis: cash[k],
                            entry_date: date,
                            entry_price: bar.open,
                            exit_idx: d + config.hold_days,
                        };
                        cash[k] = 0.0;
                    }
                    None => {
                        warn!("{symbol}: no price on {date}, entry skipped");
                        skipped += 1;
                        *slot = Slot::Idle;
                    }
                }
            }
        }

        if d + 1 + config.hold_days < calendar.len() {
            let mut taken: BTreeSet<String> = slots.iter().filter_map(|s| s.symbol().map(String::from)).collect();
            for s in &by_day[d] {
                if s.p_up <= config.entry_threshold {
                    break;
                }
                let Some(k) = slots.iter().position(|s| matches!(s, Slot::Idle)) else {
                    break;
                };
                if !taken.insert(s.symbol.clone()) {
                    continue;
                }
                slots[k] = Slot::Pending {
                    symbol: s.symbol.clone(),
                    entry_idx: d + 1,
                };
                orders.push(Order {
                    signal_date: date,
                    symbol: s.symbol.clone(),
                    p_up: s.p_up,
                    slot: k,
                });
            }
        }

        let mut value = 0.0;
        for (k, slot) in slots.iter().enumerate() {
            value += match slot {
                Slot::Holding { symbol, shares, .. } => {
                    shares * last_close(symbol, date).expect("held symbols have a bar on or before entry")
                }
                _ => cash[k],
            };
        }
        equity.push(EquityPoint { date, equity: value });
    }

    let final_date = *calendar.last().expect("calendar is non-empty");
    for (k, slot) in slots.iter_mut().enumerate() {
        if let Slot::Holding {
            symbol,
            shares,
            cost_basis,
            entry_date,
            entry_price,
            ..
        } = slot
        {
            let close = last_close(symbol, final_date).expect("held symbols have a bar");
            warn!("{symbol}: still open at the end, closed at the last close {close}");
            let proceeds = *shares * close * (1.0 - config.cost);
            trades.push(Trade {
                symbol: symbol.clone(),
                slot: k,
                entry_date: *entry_date,
                entry_price: *entry_price,
                exit_date: final_date,
                exit_price: close,
                net_return: close / *entry_price * (1.0 - config.cost) - 1.0,
                pnl: proceeds - *cost_basis,
            });
            cash[k] = proceeds;
            *slot = Slot::Idle;
        }
    }
    if let Some(last) = equity.last_mut() {
        last.equity = cash.iter().sum();
    }

    let curve: Vec<f64> = equity.iter().map(|p| p.equity).collect();
    let first = curve[0];
    let final_equity = curve[curve.len() - 1];
    Ok(BacktestReport {
        config: config.clone(),
        summary: BacktestSummary {
            pf: final_equity / first - 1.0,
            mdd: max_drawdown(&curve)?,
            trades: trades.len(),
            winning_trades: trades.iter().filter(|t| t.net_return > 0.0).count(),
            skipped_entries: skipped,
            final_equity,
        },
        equity,
        orders,
        trades,
    })
}
