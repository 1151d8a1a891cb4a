use rand::Rng;

use super::Tensor;

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform initialization on `[-b, b]` with `b = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_init(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let b = xavier_bound(fan_in, fan_out);
    let mut t = Tensor::zeros(shape);
    for v in &mut t.data {
        *v = rng.random_range(-b..=b);
    }
    t
}
