use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Valid, stride-1 2-D convolution over `[h, w, c_in]` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    /// `[kh, kw, c_in, c_out]`
    pub kernel: Tensor,
    /// `[c_out]`
    pub bias: Tensor,
}

impl Conv2d {
    pub fn zeros(kh: usize, kw: usize, c_in: usize, c_out: usize) -> Self {
        Self {
            kernel: Tensor::zeros(&[kh, kw, c_in, c_out]),
            bias: Tensor::zeros(&[c_out]),
        }
    }

    fn dims(&self) -> (usize, usize, usize, usize) {
        let s = &self.kernel.shape;
        (s[0], s[1], s[2], s[3])
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<[usize; 3]> {
        let (kh, kw, c_in, c_out) = self.dims();
        if input.len() != 3 || input[2] != c_in || input[0] < kh || input[1] < kw {
            return Err(Error::Shape(format!(
                "conv {kh}x{kw}x{c_in}->{c_out} cannot take input {input:?}"
            )));
        }
        Ok([input[0] - kh + 1, input[1] - kw + 1, c_out])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let [oh, ow, _] = self.output_shape(&x.shape)?;
        let (kh, kw, c_in, c_out) = self.dims();
        let w = x.shape[1];
        let k = &self.kernel.data;
        let mut y = Tensor::zeros(&[oh, ow, c_out]);
        for oy in 0..oh {
            for ox in 0..ow {
                let out = &mut y.data[(oy * ow + ox) * c_out..][..c_out];
                out.copy_from_slice(&self.bias.data);
                for ky in 0..kh {
                    for kx in 0..kw {
                        let xin = &x.data[((oy + ky) * w + ox + kx) * c_in..][..c_in];
                        let kbase = (ky * kw + kx) * c_in * c_out;
                        for (ci, &a) in xin.iter().enumerate() {
                            // chart images are mostly background
                            if a == 0.0 {
                                continue;
                            }
                            let krow = &k[kbase + ci * c_out..][..c_out];
                            for (o, kv) in out.iter_mut().zip(krow) {
                                *o += a * kv;
                            }
                        }
                    }
                }
            }
        }
        Ok(y)
    }

    /// Accumulates parameter gradients into `dkernel`/`dbias` and returns
    /// the input gradient when `want_dx` is set.
    pub fn backward(
        &self,
        x: &Tensor,
        dy: &Tensor,
        dkernel: &mut Tensor,
        dbias: &mut Tensor,
        want_dx: bool,
    ) -> Option<Tensor> {
        let (kh, kw, c_in, c_out) = self.dims();
        let (oh, ow) = (dy.shape[0], dy.shape[1]);
        let w = x.shape[1];
        let k = &self.kernel.data;
        let mut dx = want_dx.then(|| x.zeros_like());
        for oy in 0..oh {
            for ox in 0..ow {
                let g = &dy.data[(oy * ow + ox) * c_out..][..c_out];
                for (db, gv) in dbias.data.iter_mut().zip(g) {
                    *db += gv;
                }
                for ky in 0..kh {
                    for kx in 0..kw {
                        let xoff = ((oy + ky) * w + ox + kx) * c_in;
                        let kbase = (ky * kw + kx) * c_in * c_out;
                        for ci in 0..c_in {
                            let a = x.data[xoff + ci];
                            let kidx = kbase + ci * c_out;
                            if a != 0.0 {
                                let dk = &mut dkernel.data[kidx..][..c_out];
                                for (d, gv) in dk.iter_mut().zip(g) {
                                    *d += a * gv;
                                }
                            }
                            if let Some(dx) = dx.as_mut() {
                                let krow = &k[kidx..][..c_out];
                                let s: f64 = krow.iter().zip(g).map(|(kv, gv)| kv * gv).sum();
                                dx.data[xoff + ci] += s;
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Tensor {
    let mut y = x.clone();
    for v in &mut y.data {
        if *v < 0.0 {
            *v *= slope;
        }
    }
    y
}

/// Multiplies `grad` by the activation derivative. `y` may be either the
/// pre- or post-activation values: for a positive slope their signs agree.
pub fn leaky_relu_backward_inplace(y: &[f64], grad: &mut [f64], slope: f64) {
    for (g, &v) in grad.iter_mut().zip(y) {
        if v < 0.0 {
            *g *= slope;
        }
    }
}

/// Non-overlapping max pooling over `[h, w, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxPool {
    pub ph: usize,
    pub pw: usize,
}

impl MaxPool {
    pub fn output_shape(&self, input: &[usize]) -> Result<[usize; 3]> {
        if input.len() != 3 || input[0] < self.ph || input[1] < self.pw || self.ph == 0 || self.pw == 0 {
            return Err(Error::Shape(format!(
                "{}x{} pool cannot take input {input:?}",
                self.ph, self.pw
            )));
        }
        Ok([input[0] / self.ph, input[1] / self.pw, input[2]])
    }

    /// Returns the pooled tensor and, per output element, the flat input
    /// index of its maximum (first occurrence on ties).
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        let [oh, ow, c] = self.output_shape(&x.shape)?;
        let w = x.shape[1];
        let mut y = Tensor::zeros(&[oh, ow, c]);
        let mut arg = vec![0usize; oh * ow * c];
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for dy in 0..self.ph {
                        for dx in 0..self.pw {
                            let idx = ((oy * self.ph + dy) * w + ox * self.pw + dx) * c + ch;
                            if x.data[idx] > best {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o = (oy * ow + ox) * c + ch;
                    y.data[o] = best;
                    arg[o] = best_idx;
                }
            }
        }
        Ok((y, arg))
    }

    pub fn backward(&self, input_shape: &[usize], argmax: &[usize], dy: &[f64]) -> Tensor {
        let mut dx = Tensor::zeros(input_shape);
        for (&i, &g) in argmax.iter().zip(dy) {
            dx.data[i] += g;
        }
        dx
    }
}

/// Affine map `y = x W + b` with `W` of shape `[in, out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[input, output]),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (n_in, n_out) = (self.in_dim(), self.out_dim());
        if x.len() != n_in {
            return Err(Error::Shape(format!(
                "linear {n_in}->{n_out} got an input of length {}",
                x.len()
            )));
        }
        let mut y = self.bias.data.clone();
        for (i, &a) in x.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.weight.data[i * n_out..][..n_out];
            for (o, w) in y.iter_mut().zip(row) {
                *o += a * w;
            }
        }
        Ok(y)
    }

    pub fn backward(&self, x: &[f64], dy: &[f64], dweight: &mut Tensor, dbias: &mut Tensor, want_dx: bool) -> Option<Vec<f64>> {
        let n_out = self.out_dim();
        for (db, g) in dbias.data.iter_mut().zip(dy) {
            *db += g;
        }
        for (i, &a) in x.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let drow = &mut dweight.data[i * n_out..][..n_out];
            for (d, g) in drow.iter_mut().zip(dy) {
                *d += a * g;
            }
        }
        want_dx.then(|| {
            (0..x.len())
                .map(|i| {
                    let row = &self.weight.data[i * n_out..][..n_out];
                    row.iter().zip(dy).map(|(w, g)| w * g).sum()
                })
                .collect()
        })
    }
}
