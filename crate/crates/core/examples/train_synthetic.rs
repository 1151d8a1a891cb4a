//! Trains SMSFR-CNN and MSR-CNN on a synthetic universe with a planted
//! candle-direction rule and reports held-out accuracy.
//!
//! cargo run --release --example train_synthetic [symbols] [days] [epochs]

use std::time::Instant;

use msr_cnn::backtest::ppv_npv;
use msr_cnn::market::{date_cutoffs, split_by_date, synth_universe, universe_samples, SampleParams, SynthParams};
use msr_cnn::model::{encode_samples, evaluate, train_encoded, ModelConfig, ModelKind, TrainConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> msr_cnn::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (symbols, days, epochs) = (arg(1, 50), arg(2, 600), arg(3, 10));
    let universe = synth_universe(7, symbols, days, &SynthParams::default())?;
    let samples = universe_samples(&universe, &SampleParams::default())?;
    let (train_end, val_end) = date_cutoffs(&samples, 0.6, 0.2)?;
    let split = split_by_date(samples, train_end, val_end)?;
    println!(
        "samples: train {} / validation {} / test {} (dropped {})",
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        split.dropped
    );
    let train_cfg = TrainConfig {
        max_epochs: epochs,
        ..TrainConfig::default()
    };

    for kind in [ModelKind::Smsfr, ModelKind::Msr] {
        let start = Instant::now();
        let model = ModelConfig::desk(kind, 20);
        let train = encode_samples(&split.train, &model)?;
        let val = encode_samples(&split.validation, &model)?;
        let test = encode_samples(&split.test, &model)?;
        let ckpt = train_encoded(&model, &train_cfg, &train, &val)?;
        let net = ckpt.network()?;
        let metrics = evaluate(&net, &test)?;
        let preds: Vec<u8> = test.iter().map(|s| net.predict_encoded(s).map(|p| p.class)).collect::<Result<_, _>>()?;
        let labels: Vec<u8> = test.iter().map(|s| s.y).collect();
        let pn = ppv_npv(&preds, &labels)?;
        println!(
            "{kind:?}: best epoch {}, test accuracy {:.4}, PPV {:?}, NPV {:?}, {:.1}s",
            ckpt.best_epoch,
            metrics.accuracy.unwrap_or(0.0),
            pn.ppv,
            pn.npv,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
