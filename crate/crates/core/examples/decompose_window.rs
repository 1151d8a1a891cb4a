//! Multi-scale decomposition of a 60-day window: sub-map resolutions,
//! feature weights and the merged units of each map.
//!
//! cargo run --example decompose_window [n]

use msr_cnn::chart::ChartUnit;
use msr_cnn::market::{synth_series, SynthParams};
use msr_cnn::multiscale::decompose;

fn main() -> msr_cnn::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let bars = synth_series(2, 120, &SynthParams::default())?;
    let units = ChartUnit::from_bars(&bars[bars.len() - n..])?;
    let set = decompose(&units, n)?;
    println!("n = {n}: {} sub-maps, resolutions {:?}, weights {:?}", set.count(), set.resolutions(), set.weights());
    for map in &set.maps {
        println!("X{} (M = {}, w = {}):", map.index, map.resolution, map.weight);
        for u in &map.units {
            println!(
                "  O {:7.2}  H {:7.2}  L {:7.2}  C {:7.2}  turnover {:.4}  ma5 {:7.2}",
                u.open, u.high, u.low, u.close, u.turnover, u.ma5
            );
        }
    }
    Ok(())
}
