//! Training and optical inference for a classifier whose synapses are the
//! homodyne nonlinearity.

pub mod checkpoint;
pub mod infer;
pub mod mnist;
pub mod model;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use infer::{infer_optical, InferenceReport};
pub use mnist::{load_mnist_idx, Dataset};
pub use model::{Layer, OnnModel};
pub use train::{evaluate, train, TrainConfig, TrainReport};
