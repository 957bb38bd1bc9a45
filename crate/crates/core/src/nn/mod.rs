//! A small dense-tensor network library: layers with exact backward passes,
//! Adam, and the ACRW weight file format.

mod error;
pub mod io;
pub mod layers;
pub mod network;
pub mod optim;
mod tensor;

pub use error::NnError;
pub use io::{decode_weights, encode_weights, load_weights, save_weights};
pub use layers::{cross_entropy_loss, softmax, Activation, Mode};
pub use network::{param_count, DropoutMask, ForwardMode, LayerSpec, Network, NetworkWeights, Trace};
pub use optim::{Adam, AdamConfig};
pub use tensor::Tensor;
