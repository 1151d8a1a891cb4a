//! Renders the dated 20-day TS-OHLCT chart of a synthetic stock, prints it
//! as text and writes it as a PGM next to its multi-scale sub-maps.
//!
//! cargo run --example render_chart [n]

use msr_cnn::chart::{render_ohlct, write_image, ChartGeometry, ChartImage, ChartUnit, ImageFormat, ImageMeta};
use msr_cnn::market::{synth_universe, universe_samples, SampleParams, SynthParams};
use msr_cnn::model::{render_submaps, ModelConfig, ModelKind};

fn show(image: &ChartImage) {
    for r in 0..image.height {
        let line: String = image.row(r).iter().map(|&p| if p == 1 { '#' } else { '.' }).collect();
        println!("{line}");
    }
}

fn main() -> msr_cnn::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let universe = synth_universe(1, 1, 200, &SynthParams::default())?;
    let params = SampleParams { n, ..SampleParams::default() };
    let samples = universe_samples(&universe, &params)?;
    let sample = samples.last().expect("series long enough for one sample");

    let geometry = ChartGeometry {
        price_rows: 24,
        divider_rows: 1,
        turnover_rows: 7,
    };
    let meta = ImageMeta {
        n,
        resolution: 1,
        symbol: sample.symbol.clone(),
        end_date: Some(sample.end_date()),
    };
    let image = render_ohlct(&ChartUnit::from_bars(&sample.window)?, &geometry, meta)?;
    println!("{} ending {}: {}x{}", sample.symbol, sample.end_date(), image.height, image.width);
    show(&image);
    write_image(&image, "chart.pgm".as_ref(), ImageFormat::Pgm)?;

    let maps = render_submaps(sample, &ModelConfig::desk(ModelKind::Smsfr, n))?;
    for (i, map) in maps.iter().enumerate() {
        println!("\nX{} ({} days per unit)", i + 1, map.meta.resolution);
        show(map);
        write_image(map, format!("chart_x{}.pgm", i + 1).as_ref(), ImageFormat::Pgm)?;
    }
    Ok(())
}
