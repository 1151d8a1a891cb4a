use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::block::{BlockCache, ConvBlock};
use super::config::{ModelConfig, ModelKind};
use super::encode::EncodedSample;
use crate::error::{Error, Result};
use crate::market::SEQ_LEN;
use crate::nn::{leaky_relu_backward_inplace, softmax_ce, xavier_init, Linear, Parameterized, Tensor};
use crate::seqfeat::SEQ_FEATURES;

const BLOCK_PARAMS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub config: ModelConfig,
    /// One block per sub-map, finest first.
    pub blocks: Vec<ConvBlock>,
    pub seq_block: Option<ConvBlock>,
    pub hidden: Linear,
    pub cls: Linear,
    pub reg: Option<Linear>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOutput {
    pub logits: [f64; 2],
    /// Softmax of `logits`; index 1 is "up".
    pub probs: [f64; 2],
    pub r_hat: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NetworkCache {
    blocks: Vec<BlockCache>,
    seq: Option<BlockCache>,
    fused: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub p_up: f64,
    pub p_down: f64,
    pub r_hat: Option<f64>,
    /// 1 when `p_up > p_down`; exact ties predict down.
    pub class: u8,
}

fn dense(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Linear {
    Linear {
        weight: xavier_init(&[input, output], input, output, rng),
        bias: Tensor::zeros(&[output]),
    }
}

impl Network {
    /// Builds a freshly initialized network from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dims = config.block_dims()?;
        let blocks = config
            .image_shapes()?
            .into_iter()
            .zip(&dims)
            .map(|(shape, &d)| ConvBlock::new(shape, config.msf_channels, d, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let smsfr = config.kind == ModelKind::Smsfr;
        let seq_block = if smsfr {
            Some(ConvBlock::new([SEQ_LEN, SEQ_FEATURES, 1], config.ts_channels, config.seq_dim, &mut rng)?)
        } else {
            None
        };
        let fused = config.fusion_dim + if smsfr { config.seq_dim } else { 0 };
        let hidden = dense(fused, config.head_hidden, &mut rng);
        let cls = dense(config.head_hidden, 2, &mut rng);
        let reg = smsfr.then(|| dense(config.head_hidden, 1, &mut rng));
        Ok(Self {
            config,
            blocks,
            seq_block,
            hidden,
            cls,
            reg,
        })
    }

    fn check_input(&self, sample: &EncodedSample) -> Result<()> {
        if sample.images.len() != self.blocks.len() {
            return Err(Error::Shape(format!(
                "sample has {} sub-map images, model expects {}",
                sample.images.len(),
                self.blocks.len()
            )));
        }
        for (img, block) in sample.images.iter().zip(&self.blocks) {
            let want = block.input_shape[0] * block.input_shape[1];
            if img.len() != want {
                return Err(Error::Shape(format!("image has {} pixels, block expects {want}", img.len())));
            }
        }
        match (&self.seq_block, &sample.seq) {
            (Some(_), Some(s)) if s.len() == SEQ_LEN * SEQ_FEATURES => Ok(()),
            (Some(_), _) => Err(Error::Shape("SMSFR input needs a 30x12 sequence matrix".into())),
            (None, _) => Ok(()),
        }
    }

    pub fn forward(&self, sample: &EncodedSample) -> Result<(ForwardOutput, NetworkCache)> {
        self.check_input(sample)?;
        let slope = self.config.leaky_slope;
        let mut fused = Vec::with_capacity(self.hidden.in_dim());
        let mut caches = Vec::with_capacity(self.blocks.len());
        for (img, block) in sample.images.iter().zip(&self.blocks) {
            let x = Tensor::from_vec(&block.input_shape, img.iter().map(|&p| p as f64).collect())?;
            let (out, cache) = block.forward(x, slope)?;
            fused.extend_from_slice(&out);
            caches.push(cache);
        }
        let seq = match (&self.seq_block, &sample.seq) {
            (Some(block), Some(values)) => {
                let x = Tensor::from_vec(&block.input_shape, values.clone())?;
                let (out, cache) = block.forward(x, slope)?;
                fused.extend_from_slice(&out);
                Some(cache)
            }
            _ => None,
        };
        let mut h = self.hidden.forward(&fused)?;
        for v in &mut h {
            if *v < 0.0 {
                *v *= slope;
            }
        }
        let z = self.cls.forward(&h)?;
        let logits = [z[0], z[1]];
        let r_hat = match &self.reg {
            Some(reg) => Some(reg.forward(&h)?[0]),
            None => None,
        };
        let probs = crate::nn::softmax(logits);
        Ok((
            ForwardOutput { logits, probs, r_hat },
            NetworkCache {
                blocks: caches,
                seq,
                fused,
                h,
            },
        ))
    }

    /// Per-sample loss terms `(cross-entropy, squared return error)`; the
    /// second is zero for MSR.
    pub fn loss_terms(&self, out: &ForwardOutput, sample: &EncodedSample) -> (f64, f64) {
        let (ce, _) = softmax_ce(out.logits, sample.y as usize);
        let sq = out.r_hat.map_or(0.0, |r| (r - sample.r) * (r - sample.r));
        (ce, sq)
    }

    /// Forward plus backward for one sample. Gradients of
    /// `scale * (ce + lambda * sq)` are accumulated into `grads`, laid out as
    /// [`Parameterized::params`]. Returns `(ce, sq)` unscaled.
    pub fn accumulate_gradients(&self, sample: &EncodedSample, scale: f64, grads: &mut [Tensor]) -> Result<(f64, f64)> {
        let (out, cache) = self.forward(sample)?;
        let (ce, sq) = self.loss_terms(&out, sample);
        let slope = self.config.leaky_slope;
        let y = sample.y as usize;
        let dlogits: Vec<f64> = (0..2)
            .map(|k| scale * (out.probs[k] - if k == y { 1.0 } else { 0.0 }))
            .collect();

        let nb = self.blocks.len() * BLOCK_PARAMS;
        let (block_grads, rest) = grads.split_at_mut(nb);
        let (seq_grads, rest) = rest.split_at_mut(if self.seq_block.is_some() { BLOCK_PARAMS } else { 0 });
        let (hidden_grads, rest) = rest.split_at_mut(2);
        let (cls_grads, reg_grads) = rest.split_at_mut(2);

        let [gw, gb] = cls_grads else { unreachable!() };
        let mut dh = self.cls.backward(&cache.h, &dlogits, gw, gb, true).expect("dx requested");
        if let (Some(reg), Some(r_hat)) = (&self.reg, out.r_hat) {
            let dr = scale * self.config.lambda * 2.0 * (r_hat - sample.r);
            let [gw, gb] = reg_grads else { unreachable!() };
            let dh_reg = reg.backward(&cache.h, &[dr], gw, gb, true).expect("dx requested");
            for (a, b) in dh.iter_mut().zip(dh_reg) {
                *a += b;
            }
        }
        leaky_relu_backward_inplace(&cache.h, &mut dh, slope);
        let [gw, gb] = hidden_grads else { unreachable!() };
        let dfused = self.hidden.backward(&cache.fused, &dh, gw, gb, true).expect("dx requested");

        let mut offset = 0;
        for ((block, bc), g) in self.blocks.iter().zip(&cache.blocks).zip(block_grads.chunks_mut(BLOCK_PARAMS)) {
            let d = block.out_dim();
            block.backward(bc, &dfused[offset..offset + d], slope, g);
            offset += d;
        }
        if let (Some(block), Some(bc)) = (&self.seq_block, &cache.seq) {
            block.backward(bc, &dfused[offset..offset + block.out_dim()], slope, seq_grads);
        }
        Ok((ce, sq))
    }

    pub fn predict_encoded(&self, sample: &EncodedSample) -> Result<Prediction> {
        let (out, _) = self.forward(sample)?;
        Ok(Prediction {
            p_up: out.probs[1],
            p_down: out.probs[0],
            r_hat: out.r_hat,
            class: u8::from(out.probs[1] > out.probs[0]),
        })
    }
}

impl Parameterized for Network {
    fn params(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        for b in self.blocks.iter().chain(&self.seq_block) {
            out.extend(b.params());
        }
        out.extend([&self.hidden.weight, &self.hidden.bias, &self.cls.weight, &self.cls.bias]);
        if let Some(reg) = &self.reg {
            out.extend([&reg.weight, &reg.bias]);
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        for b in self.blocks.iter_mut().chain(&mut self.seq_block) {
            out.extend(b.params_mut());
        }
        out.extend([
            &mut self.hidden.weight,
            &mut self.hidden.bias,
            &mut self.cls.weight,
            &mut self.cls.bias,
        ]);
        if let Some(reg) = &mut self.reg {
            out.extend([&mut reg.weight, &mut reg.bias]);
        }
        out
    }

    fn param_names(&self) -> Vec<String> {
        const PARTS: [&str; BLOCK_PARAMS] = [
            "conv1.kernel",
            "conv1.bias",
            "conv2.kernel",
            "conv2.bias",
            "proj.weight",
            "proj.bias",
        ];
        let mut names = Vec::new();
        for i in 0..self.blocks.len() {
            names.extend(PARTS.iter().map(|p| format!("msf{}.{p}", i + 1)));
        }
        if self.seq_block.is_some() {
            names.extend(PARTS.iter().map(|p| format!("ts.{p}")));
        }
        names.extend(["hidden.weight", "hidden.bias", "cls.weight", "cls.bias"].map(String::from));
        if self.reg.is_some() {
            names.extend(["reg.weight", "reg.bias"].map(String::from));
        }
        names
    }
}
