/// Numerically stable two-class softmax.
pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Cross-entropy of class `y` under `softmax(logits)`; index 1 is "up".
///
/// Returns the loss and the probability vector. The gradient with respect
/// to the logits is `probs - onehot(y)`.
pub fn softmax_ce(logits: [f64; 2], y: usize) -> (f64, [f64; 2]) {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    (lse - logits[y], softmax(logits))
}

pub fn mse(pred: f64, target: f64) -> f64 {
    (pred - target) * (pred - target)
}

/// Gradient of the batch-mean squared error for one element.
pub fn mse_grad(pred: f64, target: f64, batch: usize) -> f64 {
    2.0 * (pred - target) / batch as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_logits_cost_ln2() {
        let (loss, p) = softmax_ce([0.0, 0.0], 1);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let (loss, p) = softmax_ce([1000.0, 0.0], 0);
        assert_eq!(p, [1.0, 0.0]);
        assert_eq!(loss, 0.0);
        let (loss, _) = softmax_ce([1000.0, 0.0], 1);
        assert_eq!(loss, 1000.0);
    }

    #[test]
    fn ce_matches_binary_form() {
        let logits = [0.3, -1.2];
        let p = softmax(logits);
        for y in 0..2 {
            let yf = y as f64;
            let want = -yf * p[1].ln() - (1.0 - yf) * p[0].ln();
            assert!((softmax_ce(logits, y).0 - want).abs() < 1e-14);
        }
    }

    #[test]
    fn mse_values() {
        assert_eq!(mse(0.2, 0.2), 0.0);
        assert!((mse(0.05, 0.03) - 0.0004).abs() < 1e-15);
        assert!((mse_grad(0.05, 0.03, 2) - 0.02).abs() < 1e-15);
    }
}
