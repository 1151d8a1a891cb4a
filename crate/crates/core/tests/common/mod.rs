#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use msr_cnn::backtest::{run_backtest, BacktestConfig, BacktestReport, Signal};
use msr_cnn::chart::{ChartGeometry, ChartUnit, ImageMeta};
use msr_cnn::market::{DailyBar, Universe};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn bar(date: NaiveDate, open: f64, close: f64) -> DailyBar {
    DailyBar {
        date,
        open,
        high: open.max(close) + 0.05,
        low: open.min(close) - 0.05,
        close,
        volume: 1000.0,
        turnover_rate: 0.01,
        ma5: None,
    }
}

/// Weekdays from Monday 2024-01-01.
pub fn weekdays(count: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    let mut out = Vec::new();
    while out.len() < count {
        if chrono::Datelike::weekday(&d).number_from_monday() <= 5 {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

pub fn series(dates: &[NaiveDate], opens: &[f64], closes: &[f64]) -> Vec<DailyBar> {
    dates.iter().zip(opens).zip(closes).map(|((&d, &o), &c)| bar(d, o, c)).collect()
}

pub fn signal(date: NaiveDate, symbol: &str, p_up: f64) -> Signal {
    Signal {
        date,
        symbol: symbol.into(),
        p_up,
        r_hat: None,
    }
}

pub const A_OPEN: [f64; 15] = [10.0, 10.0, 10.5, 10.2, 11.0, 11.2, 10.8, 10.5, 10.0, 10.2, 10.4, 10.4, 10.6, 10.8, 11.0];
pub const A_CLOSE: [f64; 15] = [10.0, 10.4, 10.3, 10.9, 11.1, 10.9, 10.6, 10.1, 10.1, 10.3, 10.4, 10.5, 10.7, 10.9, 11.0];
pub const B_OPEN: [f64; 15] = [20.0, 20.0, 20.0, 20.0, 20.0, 21.0, 20.5, 19.0, 18.0, 18.5, 19.0, 19.0, 19.0, 19.0, 19.0];
pub const B_CLOSE: [f64; 15] = [20.0, 20.0, 20.0, 20.0, 20.8, 20.6, 19.2, 18.1, 18.4, 18.8, 19.0, 19.0, 19.0, 19.0, 19.0];
pub const C_OPEN: [f64; 15] = [5.0, 5.0, 5.2, 5.4, 5.5, 5.3, 5.3, 5.3, 5.3, 5.2, 5.0, 4.8, 4.6, 4.5, 4.7];
pub const C_CLOSE: [f64; 15] = [5.0, 5.1, 5.3, 5.5, 5.4, 5.3, 5.3, 5.3, 5.25, 5.1, 4.9, 4.7, 4.55, 4.6, 4.8];

pub fn ledger_scenario() -> (Universe, Vec<Signal>, BacktestConfig) {
    let dates = weekdays(15);
    let mut prices = Universe::new();
    prices.insert("A".into(), series(&dates, &A_OPEN, &A_CLOSE));
    prices.insert("B".into(), series(&dates, &B_OPEN, &B_CLOSE));
    prices.insert("C".into(), series(&dates, &C_OPEN, &C_CLOSE));
    let signals = vec![
        signal(dates[0], "A", 0.90),
        signal(dates[0], "B", 0.85),
        signal(dates[0], "C", 0.95),
        // both slots busy
        signal(dates[2], "B", 0.99),
        // equal probabilities: A before B
        signal(dates[4], "B", 0.90),
        signal(dates[4], "A", 0.90),
        signal(dates[5], "C", 0.97),
        signal(dates[8], "C", 0.70),
        // exactly at the threshold does not qualify
        signal(dates[9], "B", 0.80),
        signal(dates[9], "C", 0.81),
        // exit would fall past the last day
        signal(dates[11], "A", 0.99),
    ];
    let config = BacktestConfig {
        max_positions: 2,
        hold_days: 3,
        initial_capital: 1000.0,
        ..BacktestConfig::default()
    };
    (prices, signals, config)
}

pub fn random_market(rng: &mut ChaCha8Rng, symbols: usize, days: usize) -> (Universe, Vec<Signal>) {
    let dates = weekdays(days);
    let mut prices = Universe::new();
    let mut signals = Vec::new();
    for s in 0..symbols {
        let name = format!("S{s:02}");
        let mut p = rng.random_range(5.0..50.0);
        let mut bars = Vec::new();
        for &d in &dates {
            let open = p * rng.random_range(0.97..1.03);
            p = open * rng.random_range(0.95..1.05);
            // occasional suspension
            if rng.random_bool(0.05) {
                continue;
            }
            bars.push(bar(d, open, p));
            if rng.random_bool(0.4) {
                signals.push(signal(d, &name, (rng.random_range(0.5..1.0f64) * 100.0).round() / 100.0));
            }
        }
        prices.insert(name, bars);
    }
    (prices, signals)
}

pub fn brute_force_mdd(v: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..v.len() {
        for i in 0..=j {
            let peak = v[..=i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((peak - v[j]) / peak);
        }
    }
    worst
}

/// Mutates every bar after a random day and checks that orders decided and
/// equity marked up to that day are unchanged.
pub fn no_lookahead_replays(seed: u64, runs: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for run in 0..runs {
        let (prices, signals) = random_market(&mut rng, 6, 40);
        let config = BacktestConfig {
            max_positions: 3,
            ..BacktestConfig::default()
        };
        let base = run_backtest(&signals, &prices, &config).map_err(|e| e.to_string())?;
        let dates: Vec<NaiveDate> = base.equity.iter().map(|p| p.date).collect();
        let t = dates[rng.random_range(0..dates.len())];
        let mut mutated = prices.clone();
        for bars in mutated.values_mut() {
            for b in bars.iter_mut().filter(|b| b.date > t) {
                let f = rng.random_range(0.5..2.0);
                *b = bar(b.date, b.open * f, b.close * f * rng.random_range(0.9..1.1));
            }
        }
        let replay = run_backtest(&signals, &mutated, &config).map_err(|e| e.to_string())?;
        let decided =
            |r: &BacktestReport| r.orders.iter().filter(|o| o.signal_date <= t).cloned().collect::<Vec<_>>();
        if decided(&base) != decided(&replay) {
            return Err(format!("run {run}: decisions through {t} changed"));
        }
        let through =
            |r: &BacktestReport| r.equity.iter().filter(|p| p.date <= t).map(|p| p.equity).collect::<Vec<_>>();
        if t < *dates.last().unwrap() && through(&base) != through(&replay) {
            return Err(format!("run {run}: equity through {t} changed"));
        }
    }
    Ok(())
}

pub fn oracle_count(n: usize) -> usize {
    // smallest C with 5^C >= n
    let mut c = 0;
    let mut p = 1;
    while p < n {
        p *= 5;
        c += 1;
    }
    c
}

/// Aggregates by walking every day explicitly.
pub fn oracle_decompose(days: &[ChartUnit], n: usize) -> Vec<Vec<(f64, f64, f64, f64, f64, f64)>> {
    let c = oracle_count(n);
    let window = &days[days.len() - n..];
    let mut maps = Vec::new();
    for i in 1..=c {
        let m = 5usize.pow(i as u32 - 1).min(n / 5);
        let first = n - 5 * m;
        let mut blocks = Vec::new();
        for j in 0..5 {
            let lo = first + j * m;
            let (mut high, mut low, mut turnover) = (f64::MIN, f64::MAX, 0.0);
            for d in &window[lo..lo + m] {
                if d.high > high {
                    high = d.high;
                }
                if d.low < low {
                    low = d.low;
                }
                turnover += d.turnover;
            }
            let last = &window[lo + m - 1];
            blocks.push((window[lo].open, high, low, last.close, turnover, last.ma5));
        }
        maps.push(blocks);
    }
    maps
}

pub fn random_days(seed: u64, len: usize) -> Vec<ChartUnit> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let low: f64 = rng.random_range(1.0..100.0);
            let high = low + rng.random_range(0.0..5.0);
            ChartUnit {
                open: rng.random_range(low..=high),
                high,
                low,
                close: rng.random_range(low..=high),
                turnover: rng.random_range(0.0..0.1),
                ma5: rng.random_range(low..=high),
                date: None,
            }
        })
        .collect()
}

/// The hand-drawn five-day chart in tests/data/golden_5day_weekend.pgm.
pub fn golden_units() -> Vec<ChartUnit> {
    // (date, open, high, low, close, ma5, turnover)
    let rows = [
        (date(2024, 1, 4), 4.0, 6.0, 3.0, 5.0, 7.0, 0.0),
        (date(2024, 1, 5), 5.0, 8.0, 5.0, 8.0, 6.0, 0.04),
        (date(2024, 1, 8), 8.0, 10.0, 7.0, 9.0, 6.0, 0.03),
        (date(2024, 1, 9), 9.0, 9.0, 4.0, 4.0, 7.0, 0.01),
        (date(2024, 1, 10), 4.0, 5.0, 1.0, 2.0, 6.0, 0.005),
    ];
    rows.iter()
        .map(|&(d, open, high, low, close, ma5, turnover)| ChartUnit {
            open,
            high,
            low,
            close,
            turnover,
            ma5,
            date: Some(d),
        })
        .collect()
}

pub fn golden_meta() -> ImageMeta {
    ImageMeta {
        n: 5,
        resolution: 1,
        symbol: "GOLD".into(),
        end_date: Some(date(2024, 1, 10)),
    }
}

pub fn small_geometry() -> ChartGeometry {
    ChartGeometry {
        price_rows: 10,
        divider_rows: 1,
        turnover_rows: 4,
    }
}
