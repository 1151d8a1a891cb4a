use serde::{Deserialize, Serialize};

use crate::chart::ChartGeometry;
use crate::error::{Error, Result};
use crate::multiscale::{feature_weights, num_submaps};
use crate::nn::{AdamConfig, DEFAULT_LEAKY_SLOPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Image-only multi-scale classifier.
    Msr,
    /// Images plus the sequence branch, with a return-regression head.
    Smsfr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Image window length in days.
    pub n: usize,
    pub geometry: ChartGeometry,
    /// Total width of the concatenated image features.
    pub fusion_dim: usize,
    /// Output width of the sequence block.
    pub seq_dim: usize,
    pub head_hidden: usize,
    /// Weight of the regression loss; ignored by MSR.
    pub lambda: f64,
    pub leaky_slope: f64,
    /// Channels of the two convolutions in each image block.
    pub msf_channels: [usize; 2],
    /// Channels of the two convolutions in the sequence block.
    pub ts_channels: [usize; 2],
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Smsfr,
            n: 20,
            geometry: ChartGeometry::default(),
            fusion_dim: 256,
            seq_dim: 128,
            head_hidden: 128,
            lambda: 1.0,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            msf_channels: [64, 128],
            ts_channels: [128, 256],
            seed: 0,
        }
    }
}

/// Splits `total` into integer parts proportional to `weights`, handing the
/// leftover units to the largest fractional remainders (lower index first on
/// ties). The parts always sum to `total`.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut parts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        parts[k] += 1;
    }
    parts
}

impl ModelConfig {
    /// Architecture sizes small enough to train on one CPU core in minutes.
    pub fn desk(kind: ModelKind, n: usize) -> Self {
        Self {
            kind,
            n,
            geometry: ChartGeometry {
                price_rows: 24,
                divider_rows: 1,
                turnover_rows: 7,
            },
            fusion_dim: 32,
            seq_dim: 16,
            head_hidden: 32,
            msf_channels: [4, 8],
            ts_channels: [4, 8],
            ..Self::default()
        }
    }

    /// Tiny sizes for finite-difference checks.
    pub fn toy(kind: ModelKind, n: usize) -> Self {
        Self {
            kind,
            n,
            geometry: ChartGeometry {
                price_rows: 10,
                divider_rows: 1,
                turnover_rows: 5,
            },
            fusion_dim: 8,
            seq_dim: 4,
            head_hidden: 6,
            msf_channels: [2, 3],
            ts_channels: [2, 3],
            ..Self::default()
        }
    }

    pub fn submaps(&self) -> Result<usize> {
        num_submaps(self.n)
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        Ok(feature_weights(self.submaps()?))
    }

    pub fn block_dims(&self) -> Result<Vec<usize>> {
        Ok(largest_remainder(&self.weights()?, self.fusion_dim))
    }

    /// `[height, width, 1]` of each sub-map image; the finest map is dated.
    pub fn image_shapes(&self) -> Result<Vec<[usize; 3]>> {
        let h = self.geometry.height();
        Ok((0..self.submaps()?)
            .map(|i| {
                let w = if i == 0 {
                    ChartGeometry::dated_width(crate::multiscale::UNITS_PER_MAP)
                } else {
                    ChartGeometry::merged_width(crate::multiscale::UNITS_PER_MAP)
                };
                [h, w, 1]
            })
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.submaps()?;
        if self.block_dims()?.contains(&0) {
            return Err(Error::Config(format!(
                "fusion_dim {} leaves a sub-map block with no features",
                self.fusion_dim
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!("leaky slope {} outside (0, 1)", self.leaky_slope)));
        }
        let zero = |c: &[usize; 2]| c.contains(&0);
        if self.head_hidden == 0 || zero(&self.msf_channels) || (self.kind == ModelKind::Smsfr && (self.seq_dim == 0 || zero(&self.ts_channels))) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// First epoch eligible as the returned best model.
    pub early_stop_start: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
            batch_size: 64,
            max_epochs: 20,
            patience: 3,
            early_stop_start: 5,
        }
    }
}

impl TrainConfig {
    /// Full-scale hyperparameters: learning rate 3e-5, batches of 256.
    pub fn full() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 256,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}
