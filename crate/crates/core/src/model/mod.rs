//! MSR-CNN and SMSFR-CNN: assembly, training, inference and checkpoints.
//!
//! Both networks run one convolutional block per sub-map image and
//! concatenate the block outputs, giving each block a share of `fusion_dim`
//! proportional to its feature weight. SMSFR adds a block over the 30x12
//! sequence matrix and a linear return-regression head next to the
//! classifier; both heads read the same hidden layer.

mod block;
mod checkpoint;
mod config;
mod encode;
mod network;
mod train;
mod verify;

pub use block::{ConvBlock, BlockCache, BLOCK_KERNEL, BLOCK_POOL};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, FORMAT_VERSION};
pub use config::{largest_remainder, ModelConfig, ModelKind, TrainConfig};
pub use encode::{encode_sample, encode_samples, render_submaps, EncodedSample};
pub use network::{ForwardOutput, Network, NetworkCache, Prediction};
pub use train::{batch_gradients, evaluate, predict, train, train_encoded, BatchOutcome, EpochRecord, EvalMetrics};
pub use verify::{graph_check, graph_checks, random_inputs, toy_network, GRAPH_STEP, GRAPH_TOLERANCE};
