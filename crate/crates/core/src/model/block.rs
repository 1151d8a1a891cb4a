use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::{leaky_relu, leaky_relu_backward_inplace, xavier_init, Conv2d, Linear, MaxPool, Tensor};

pub const BLOCK_KERNEL: (usize, usize) = (5, 3);
pub const BLOCK_POOL: MaxPool = MaxPool { ph: 2, pw: 1 };

/// conv -> leaky ReLU -> pool, twice, then flatten and project.
///
/// Used for every sub-map image and for the sequence matrix; only the input
/// shape, channel counts and output width differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub input_shape: [usize; 3],
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub proj: Linear,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    x: Tensor,
    a1: Tensor,
    arg1: Vec<usize>,
    p1: Tensor,
    a2: Tensor,
    arg2: Vec<usize>,
    flat: Vec<f64>,
}

impl ConvBlock {
    /// Shape after each stage, ending with the flattened length.
    pub fn shape_chain(input: [usize; 3], channels: [usize; 2]) -> Result<Vec<[usize; 3]>> {
        let (kh, kw) = BLOCK_KERNEL;
        let c1 = Conv2d::zeros(kh, kw, input[2], channels[0]);
        let c2 = Conv2d::zeros(kh, kw, channels[0], channels[1]);
        let s1 = c1.output_shape(&input)?;
        let s2 = BLOCK_POOL.output_shape(&s1)?;
        let s3 = c2.output_shape(&s2)?;
        let s4 = BLOCK_POOL.output_shape(&s3)?;
        Ok(vec![input, s1, s2, s3, s4])
    }

    pub fn new(input: [usize; 3], channels: [usize; 2], out_dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let chain = Self::shape_chain(input, channels)?;
        let flat: usize = chain[4].iter().product();
        let (kh, kw) = BLOCK_KERNEL;
        let conv = |c_in: usize, c_out: usize, rng: &mut _| Conv2d {
            kernel: xavier_init(&[kh, kw, c_in, c_out], kh * kw * c_in, kh * kw * c_out, rng),
            bias: Tensor::zeros(&[c_out]),
        };
        let conv1 = conv(input[2], channels[0], rng);
        let conv2 = conv(channels[0], channels[1], rng);
        let proj = Linear {
            weight: xavier_init(&[flat, out_dim], flat, out_dim, rng),
            bias: Tensor::zeros(&[out_dim]),
        };
        Ok(Self {
            input_shape: input,
            conv1,
            conv2,
            proj,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.proj.out_dim()
    }

    pub fn forward(&self, x: Tensor, slope: f64) -> Result<(Vec<f64>, BlockCache)> {
        let a1 = leaky_relu(&self.conv1.forward(&x)?, slope);
        let (p1, arg1) = BLOCK_POOL.forward(&a1)?;
        let a2 = leaky_relu(&self.conv2.forward(&p1)?, slope);
        let (p2, arg2) = BLOCK_POOL.forward(&a2)?;
        let flat = p2.data;
        let out = self.proj.forward(&flat)?;
        Ok((
            out,
            BlockCache {
                x,
                a1,
                arg1,
                p1,
                a2,
                arg2,
                flat,
            },
        ))
    }

    /// Accumulates into `grads` (conv1 k/b, conv2 k/b, proj w/b).
    pub fn backward(&self, cache: &BlockCache, dout: &[f64], slope: f64, grads: &mut [Tensor]) {
        let [g_k1, g_b1, g_k2, g_b2, g_w, g_b] = grads else {
            panic!("conv block expects six gradient tensors");
        };
        let dflat = self
            .proj
            .backward(&cache.flat, dout, g_w, g_b, true)
            .expect("dx requested");
        let mut dz2 = BLOCK_POOL.backward(&cache.a2.shape, &cache.arg2, &dflat);
        leaky_relu_backward_inplace(&cache.a2.data, &mut dz2.data, slope);
        let dp1 = self
            .conv2
            .backward(&cache.p1, &dz2, g_k2, g_b2, true)
            .expect("dx requested");
        let mut dz1 = BLOCK_POOL.backward(&cache.a1.shape, &cache.arg1, &dp1.data);
        leaky_relu_backward_inplace(&cache.a1.data, &mut dz1.data, slope);
        self.conv1.backward(&cache.x, &dz1, g_k1, g_b1, false);
    }

    pub fn params(&self) -> [&Tensor; 6] {
        [
            &self.conv1.kernel,
            &self.conv1.bias,
            &self.conv2.kernel,
            &self.conv2.bias,
            &self.proj.weight,
            &self.proj.bias,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 6] {
        [
            &mut self.conv1.kernel,
            &mut self.conv1.bias,
            &mut self.conv2.kernel,
            &mut self.conv2.bias,
            &mut self.proj.weight,
            &mut self.proj.bias,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sequence_block_shape_chain() {
        let chain = ConvBlock::shape_chain([30, 12, 1], [128, 256]).unwrap();
        assert_eq!(chain, vec![[30, 12, 1], [26, 10, 128], [13, 10, 128], [9, 8, 256], [4, 8, 256]]);
        assert_eq!(chain[4].iter().product::<usize>(), 8192);
    }

    #[test]
    fn smallest_image_block() {
        // 16 rows is the minimum height surviving two conv+pool stages
        let chain = ConvBlock::shape_chain([16, 15, 1], [64, 128]).unwrap();
        assert_eq!(chain[4], [1, 11, 128]);
        assert!(ConvBlock::shape_chain([12, 15, 1], [64, 128]).is_err());
        assert!(ConvBlock::shape_chain([15, 15, 1], [64, 128]).is_err());
    }

    #[test]
    fn zero_input_gives_bias_path_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut block = ConvBlock::new([16, 15, 1], [2, 3], 5, &mut rng).unwrap();
        block.proj.bias.data = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let (out, _) = block.forward(Tensor::zeros(&[16, 15, 1]), 0.01).unwrap();
        // conv biases are zero, so every activation is zero
        assert_eq!(out, vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(block.out_dim(), 5);
    }
}
