//! Bidirectional LSTM classifiers trained from scratch.

mod io;
pub mod lstm;
pub mod network;
pub mod optim;
pub mod preprocess;
pub mod train;

pub use io::{load_model, read_model, save_model, write_model, ModelHeader, MODEL_FORMAT_VERSION};
pub use lstm::{lstm_backward, lstm_forward, recurrent_step, LstmDims, LstmState, LstmTrace};
pub use network::{
    bidirectional_encode, count_params, loss_and_gradients, softmax, Architecture, DdConfig, Network, NetworkConfig,
    Readout, VConfig,
};
pub use optim::sgd_momentum_step;
pub use preprocess::{inject_noise, Standardizer};
pub use train::{train_from, train_network, Batching, LstmClassifier, TrainingConfig};
