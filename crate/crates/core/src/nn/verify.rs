use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    grad_check, leaky_relu, leaky_relu_backward_inplace, mse, mse_grad, softmax_ce, Conv2d, GradCheckReport,
    Linear, MaxPool, Parameterized, Tensor,
};
use crate::error::Result;

/// Step and tolerance for single-layer checks.
pub const LAYER_STEP: f64 = 1e-5;
pub const LAYER_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct NamedReport {
    pub name: String,
    pub report: GradCheckReport,
}

/// Loose tensors, checked against `Σ g ⊙ f(tensors)` for a random `g`.
struct Probe {
    names: Vec<&'static str>,
    tensors: Vec<Tensor>,
}

impl Parameterized for Probe {
    fn params(&self) -> Vec<&Tensor> {
        self.tensors.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.tensors.iter_mut().collect()
    }

    fn param_names(&self) -> Vec<String> {
        self.names.iter().map(|s| s.to_string()).collect()
    }
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape matches")
}

/// Values bounded away from zero, so a leaky ReLU kink is never straddled.
fn away_from_zero(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let mut t = random(shape, rng);
    for v in &mut t.data {
        *v = v.signum() * (0.1 + v.abs());
    }
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check(name: &str, mut probe: Probe, analytic: Vec<Tensor>, loss: impl Fn(&Probe) -> Result<f64>) -> Result<NamedReport> {
    let report = grad_check(&mut probe, &analytic, loss, LAYER_STEP, LAYER_TOLERANCE)?;
    Ok(NamedReport {
        name: name.to_string(),
        report,
    })
}

/// Central-difference checks of every layer type against its backward pass,
/// covering parameter and input gradients.
pub fn layer_checks(seed: u64) -> Result<Vec<NamedReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slope = super::DEFAULT_LEAKY_SLOPE;
    let mut out = Vec::new();

    // convolution
    let conv = |t: &[Tensor]| Conv2d {
        kernel: t[1].clone(),
        bias: t[2].clone(),
    };
    let tensors = vec![random(&[9, 7, 2], &mut rng), random(&[5, 3, 2, 3], &mut rng), random(&[3], &mut rng)];
    let g = random(&conv(&tensors).output_shape(&tensors[0].shape)?, &mut rng);
    let layer = conv(&tensors);
    let (mut dk, mut db) = (tensors[1].zeros_like(), tensors[2].zeros_like());
    let dx = layer.backward(&tensors[0], &g, &mut dk, &mut db, true).expect("dx requested");
    let probe = Probe {
        names: vec!["input", "kernel", "bias"],
        tensors,
    };
    out.push(check("conv2d", probe, vec![dx, dk, db], |p| {
        Ok(dot(&conv(&p.tensors).forward(&p.tensors[0])?.data, &g.data))
    })?);

    // linear
    let tensors = vec![random(&[7], &mut rng), random(&[7, 4], &mut rng), random(&[4], &mut rng)];
    let lin = |t: &[Tensor]| Linear {
        weight: t[1].clone(),
        bias: t[2].clone(),
    };
    let g = random(&[4], &mut rng);
    let (mut dw, mut db) = (tensors[1].zeros_like(), tensors[2].zeros_like());
    let dx = lin(&tensors)
        .backward(&tensors[0].data, &g.data, &mut dw, &mut db, true)
        .expect("dx requested");
    let dx = Tensor::from_vec(&[7], dx)?;
    let probe = Probe {
        names: vec!["input", "weight", "bias"],
        tensors,
    };
    out.push(check("linear", probe, vec![dx, dw, db], |p| {
        Ok(dot(&lin(&p.tensors).forward(&p.tensors[0].data)?, &g.data))
    })?);

    // leaky ReLU
    let x = away_from_zero(&[6, 5, 2], &mut rng);
    let g = random(&x.shape, &mut rng);
    let y = leaky_relu(&x, slope);
    let mut dx = g.clone();
    leaky_relu_backward_inplace(&y.data, &mut dx.data, slope);
    let probe = Probe {
        names: vec!["input"],
        tensors: vec![x],
    };
    out.push(check("leaky_relu", probe, vec![dx], |p| {
        Ok(dot(&leaky_relu(&p.tensors[0], slope).data, &g.data))
    })?);

    // max pooling, distinct values so no window has a tie
    let pool = MaxPool { ph: 2, pw: 1 };
    let mut x = random(&[7, 4, 3], &mut rng);
    for (k, v) in x.data.iter_mut().enumerate() {
        *v += 0.01 * k as f64;
    }
    let (y, arg) = pool.forward(&x)?;
    let g = random(&y.shape, &mut rng);
    let dx = pool.backward(&x.shape, &arg, &g.data);
    let probe = Probe {
        names: vec!["input"],
        tensors: vec![x],
    };
    out.push(check("max_pool", probe, vec![dx], |p| Ok(dot(&pool.forward(&p.tensors[0])?.0.data, &g.data)))?);

    // softmax cross-entropy
    for y in 0..2 {
        let z = random(&[2], &mut rng);
        let (_, probs) = softmax_ce([z.data[0], z.data[1]], y);
        let dz = Tensor::from_vec(&[2], (0..2).map(|k| probs[k] - if k == y { 1.0 } else { 0.0 }).collect())?;
        let probe = Probe {
            names: vec!["logits"],
            tensors: vec![z],
        };
        out.push(check(&format!("softmax_ce[y={y}]"), probe, vec![dz], |p| {
            Ok(softmax_ce([p.tensors[0].data[0], p.tensors[0].data[1]], y).0)
        })?);
    }

    // batch-mean squared error
    let pred = random(&[5], &mut rng);
    let target = random(&[5], &mut rng);
    let dp = Tensor::from_vec(&[5], pred.data.iter().zip(&target.data).map(|(&a, &b)| mse_grad(a, b, 5)).collect())?;
    let probe = Probe {
        names: vec!["prediction"],
        tensors: vec![pred],
    };
    out.push(check("mse", probe, vec![dp], |p| {
        Ok(p.tensors[0].data.iter().zip(&target.data).map(|(&a, &b)| mse(a, b)).sum::<f64>() / 5.0)
    })?);

    Ok(out)
}
