//! The 30x12 sequence matrix of one sample, as fed to the time-series block.
//!
//! cargo run --example sequence_features

use msr_cnn::market::{synth_universe, universe_samples, SampleParams, SynthParams};
use msr_cnn::seqfeat::build_matrix;

const NAMES: [&str; 12] = ["close", "open", "high", "low", "ma5", "turn", "month", "week", "r_c", "r_o", "r_h", "r_l"];

fn main() -> msr_cnn::Result<()> {
    let universe = synth_universe(3, 1, 120, &SynthParams::default())?;
    let samples = universe_samples(&universe, &SampleParams::default())?;
    let sample = &samples[samples.len() / 2];
    let m = build_matrix(sample.seq_prev_close, &sample.seq_window)?;
    println!("{} ending {}, anchor close {:.2}", sample.symbol, sample.end_date(), m.anchor_close);
    println!("{:>10} {}", "date", NAMES.map(|s| format!("{s:>7}")).join(""));
    for (bar, row) in sample.seq_window.iter().zip(&m.values) {
        let cells: String = row.iter().map(|v| format!("{v:>7.3}")).collect();
        println!("{} {cells}", bar.date);
    }
    Ok(())
}
