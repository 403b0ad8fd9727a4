//! Encoder–decoder LSTM captioner.
//!
//! An encoder LSTM folds the frame features of a clip into its final
//! `(h, c)` state. A decoder LSTM starts from that state, reads `<sos>`, and
//! emits one vocabulary token per step through a softmax projection until it
//! produces `eoc` or reaches the maximum sentence length. Training minimizes
//! the mean negative log-likelihood of ground-truth sentences under teacher
//! forcing, with gradients from backpropagation through time and Adam updates.

mod backprop;
mod checkpoint;
mod features;
mod lstm;
mod model;
mod train;
mod vocab;

use thiserror::Error;

pub use backprop::loss_and_gradients;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use features::FeatureSequence;
pub use lstm::{lstm_step, Gate, GateActivations, LstmParameters, LstmState};
pub use model::{
    decode_greedy, decode_step, encode, sentence_log_prob, CaptionModel, EncodingVector,
    Gradients, ModelDims, Parameters, DEFAULT_INIT_SCALE, DEFAULT_MAX_LEN,
};
pub use train::{train, train_with_log, Adam, TrainConfig};
pub use vocab::{
    TokenSequence, Vocabulary, EOC, EOC_TOKEN, PAD, PAD_TOKEN, SOS, SOS_TOKEN, UNK, UNK_TOKEN,
};

#[derive(Debug, Error)]
pub enum CaptionError {
    #[error("shape mismatch for {operand}: expected {expected}, found {found}")]
    Shape {
        operand: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
