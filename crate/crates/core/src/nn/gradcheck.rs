use serde::Serialize;

use super::Tensor;
use crate::error::Result;

/// Anything exposing an ordered list of parameter tensors.
pub trait Parameterized {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn param_names(&self) -> Vec<String> {
        (0..self.params().len()).map(|k| format!("param{k}")).collect()
    }

    fn zero_grads(&self) -> Vec<Tensor> {
        self.params().into_iter().map(Tensor::zeros_like).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockError {
    pub name: String,
    /// `|a - n| / (|a| + |n|)` over the whole block, in the 2-norm.
    pub rel_error: f64,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failure: Option<String>,
}

/// Compares `analytic` gradients with central differences of `loss`.
///
/// Every parameter element is perturbed by `±step`. A non-finite loss fails
/// the check.
pub fn grad_check<M: Parameterized>(
    model: &mut M,
    analytic: &[Tensor],
    mut loss: impl FnMut(&M) -> Result<f64>,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let names = model.param_names();
    let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let mut blocks = Vec::with_capacity(shapes.len());
    let mut failure = None;

    'outer: for (p, &len) in shapes.iter().enumerate() {
        let mut numeric = vec![0.0; len];
        for j in 0..len {
            let orig = model.params()[p].data[j];
            model.params_mut()[p].data[j] = orig + step;
            let plus = loss(model)?;
            model.params_mut()[p].data[j] = orig - step;
            let minus = loss(model)?;
            model.params_mut()[p].data[j] = orig;
            if !(plus.is_finite() && minus.is_finite()) {
                failure = Some(format!("non-finite loss perturbing {}[{j}]", names[p]));
                break 'outer;
            }
            numeric[j] = (plus - minus) / (2.0 * step);
        }
        let a = &analytic[p].data;
        let diff = a.iter().zip(&numeric).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let an = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
        blocks.push(BlockError {
            name: names[p].clone(),
            rel_error: diff / (an + nn).max(1e-6),
            analytic_norm: an,
            numeric_norm: nn,
        });
    }

    let max_rel_error = blocks.iter().map(|b| b.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: failure.is_none() && max_rel_error < tolerance,
        blocks,
        max_rel_error,
        tolerance,
        failure,
    })
}
