//! Generates a synthetic universe, writes it as a bars CSV and summarizes
//! the labelled samples it yields.
//!
//! cargo run --example synth_universe [symbols] [days] [out.csv]

use msr_cnn::market::{synth_universe, universe_samples, write_bars_csv, SampleParams, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let symbols = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let days = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let out = args.next().unwrap_or_else(|| "synthetic.csv".into());

    let universe = synth_universe(0, symbols, days, &SynthParams::default())?;
    std::fs::write(&out, write_bars_csv(&universe))?;
    let samples = universe_samples(&universe, &SampleParams::default())?;
    let up = samples.iter().filter(|s| s.y == 1).count();
    println!("wrote {out}: {symbols} symbols x {days} days");
    println!("{} samples (n = 20, horizon 5), {:.1}% labelled up", samples.len(), 100.0 * up as f64 / samples.len() as f64);
    for (symbol, bars) in universe.iter().take(3) {
        let last = bars.last().unwrap();
        println!("{symbol}: {} .. {}, last close {:.2}", bars[0].date, last.date, last.close);
    }
    Ok(())
}
