//! Two-hidden-layer ReLU MLP with sigmoid outputs, hand-written backprop,
//! bias-corrected Adam and the mini-batch training loop.

mod adam;
mod checkpoint;
mod mlp;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_model, read_model, save_model, write_model, CHECKPOINT_VERSION};
pub use mlp::{backward, forward, init_model, predict_proba, ForwardCache, Gradients, MlpModel};
pub use train::{train, TrainConfig, TrainOutput};
