use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, ModelKind};
use super::encode::EncodedSample;
use super::network::Network;
use super::train::batch_gradients;
use crate::error::Result;
use crate::nn::{grad_check, NamedReport, Parameterized};

/// Binary images leave max-pool pairs within ~1e-6 of each other, so the
/// step stays below that to avoid straddling a pooling switch.
pub const GRAPH_STEP: f64 = 1e-7;
pub const GRAPH_TOLERANCE: f64 = 1e-3;

/// Random binary images and sequence matrices shaped for `net`.
pub fn random_inputs(net: &Network, count: usize, seed: u64) -> Vec<EncodedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| EncodedSample {
            images: net
                .blocks
                .iter()
                .map(|b| {
                    (0..b.input_shape[0] * b.input_shape[1])
                        .map(|_| u8::from(rng.random_bool(0.3)))
                        .collect()
                })
                .collect(),
            seq: net
                .seq_block
                .as_ref()
                .map(|b| (0..b.input_shape[0] * b.input_shape[1]).map(|_| rng.random_range(0.5..1.5)).collect()),
            y: (k % 2) as u8,
            r: rng.random_range(-0.1..0.1),
        })
        .collect()
}

/// A toy-geometry network with small positive biases. Zero biases would put
/// all-background patches exactly on the activation kink.
pub fn toy_network(kind: ModelKind, n: usize, seed: u64) -> Result<Network> {
    let mut net = Network::new(ModelConfig {
        seed,
        ..ModelConfig::toy(kind, n)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let names = net.param_names();
    for (p, name) in net.params_mut().into_iter().zip(&names) {
        if name.ends_with("bias") {
            p.data.iter_mut().for_each(|b| *b = rng.random_range(0.05..0.2));
        }
    }
    Ok(net)
}

/// Checks the batch-loss gradient of a whole network, every parameter.
pub fn graph_check(net: &mut Network, data: &[EncodedSample]) -> Result<crate::nn::GradCheckReport> {
    let refs: Vec<&EncodedSample> = data.iter().collect();
    let analytic = batch_gradients(net, &refs)?.grads;
    grad_check(net, &analytic, |m| Ok(batch_gradients(m, &refs)?.loss), GRAPH_STEP, GRAPH_TOLERANCE)
}

/// MSR with three sub-maps and SMSFR with two, at toy geometry.
pub fn graph_checks(seed: u64) -> Result<Vec<NamedReport>> {
    [(ModelKind::Msr, 60, "msr[n=60]"), (ModelKind::Smsfr, 20, "smsfr[n=20]")]
        .into_iter()
        .map(|(kind, n, name)| {
            let mut net = toy_network(kind, n, seed)?;
            let data = random_inputs(&net, 3, seed ^ 0x5eed);
            Ok(NamedReport {
                name: name.to_string(),
                report: graph_check(&mut net, &data)?,
            })
        })
        .collect()
}
