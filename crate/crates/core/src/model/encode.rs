use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, ModelKind};
use crate::chart::{render_ohlct, ChartImage, ChartUnit, ImageMeta};
use crate::error::{Error, Result};
use crate::market::Sample;
use crate::multiscale::decompose;
use crate::seqfeat::build_matrix;

/// Renders the `C` sub-map images of a sample, finest first.
pub fn render_submaps(sample: &Sample, config: &ModelConfig) -> Result<Vec<ChartImage>> {
    if sample.window.len() != config.n {
        return Err(Error::Shape(format!(
            "sample window has {} days, model expects n = {}",
            sample.window.len(),
            config.n
        )));
    }
    let units = ChartUnit::from_bars(&sample.window)?;
    let set = decompose(&units, config.n)?;
    set.maps
        .iter()
        .map(|map| {
            let meta = ImageMeta {
                n: map.units.len(),
                resolution: map.resolution,
                symbol: sample.symbol.clone(),
                end_date: Some(sample.end_date()),
            };
            render_ohlct(&map.units, &config.geometry, meta)
        })
        .collect()
}

/// Network-ready inputs and targets for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedSample {
    /// Binary pixels of each sub-map, row-major.
    pub images: Vec<Vec<u8>>,
    /// Flattened 30x12 sequence matrix, SMSFR only.
    pub seq: Option<Vec<f64>>,
    pub y: u8,
    pub r: f64,
}

pub fn encode_sample(sample: &Sample, config: &ModelConfig) -> Result<EncodedSample> {
    let images = render_submaps(sample, config)?;
    let shapes = config.image_shapes()?;
    for (img, shape) in images.iter().zip(&shapes) {
        if [img.height, img.width] != [shape[0], shape[1]] {
            return Err(Error::Shape(format!(
                "rendered {}x{} image, model expects {}x{}",
                img.height, img.width, shape[0], shape[1]
            )));
        }
    }
    let seq = match config.kind {
        ModelKind::Msr => None,
        ModelKind::Smsfr => Some(build_matrix(sample.seq_prev_close, &sample.seq_window)?.flat()),
    };
    Ok(EncodedSample {
        images: images.into_iter().map(|i| i.pixels).collect(),
        seq,
        y: sample.y,
        r: sample.r,
    })
}

/// Encodes in parallel; output order matches input order.
pub fn encode_samples(samples: &[Sample], config: &ModelConfig) -> Result<Vec<EncodedSample>> {
    samples.par_iter().map(|s| encode_sample(s, config)).collect()
}
