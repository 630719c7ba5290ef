//! Volatile-regime expert: single-layer LSTM with a dense scalar head.
//!
//! Forward pass per step, with `z = [h_prev; x]`:
//!
//! ```text
//! f  = σ(W_f·z + b_f)        i = σ(W_i·z + b_i)
//! C̃  = tanh(W_C·z + b_C)     C = f ⊙ C_prev + i ⊙ C̃
//! o  = σ(W_o·z + b_o)        h = o ⊙ tanh(C)
//! ```
//!
//! The prediction is `W_y·h_last + b_y`. Gradients come from hand-written
//! backpropagation through time and are checked against central differences.

mod adam;
mod backward;
mod cell;
mod params;
mod train;

pub use adam::{adam_step, AdamState};
pub use backward::{backward_bptt, backward_from_output_grads, batch_loss, loss_mse, GradientSet};
pub use cell::{cell_step, forward_sequence, predict_lstm, LstmState, StepCache, Tape};
pub use params::{init_params, LstmParams, Matrix};
pub use train::{run_early_stopping, train_early_stopping, EpochRecord, EpochStats, TrainConfig, TrainingHistory};
