//! Minimal neural-network kernel: tensors, layers with hand-written backward
//! passes, cross-entropy loss, AdamW, finite-difference checking, and a
//! checkpoint container.

pub mod activation;
pub mod adamw;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod loss;
pub mod module;
pub mod pool;
pub mod tensor;

pub use activation::{activate, softmax, Activation, ActivationLayer};
pub use adamw::AdamW;
pub use batchnorm::BatchNorm1d;
pub use checkpoint::{load_checkpoint, load_state_dict, save_checkpoint, state_dict, NamedTensors};
pub use conv::{conv1d, conv1d_backward, Conv1d};
pub use dense::Dense;
pub use dropout::{dropout, Dropout};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use loss::softmax_cross_entropy;
pub use module::{Mode, Module, Param, Slot};
pub use pool::MaxPool1d;
pub use tensor::{Real, Tensor};
