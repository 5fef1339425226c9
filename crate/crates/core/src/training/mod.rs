//! Min-max normalization, the resolution-augmented loss, Adam, the plateau
//! schedule and the relative-error metric.

mod loss;
mod metric;
mod norm;
mod optim;
mod train;

pub use loss::{augmented_loss, batch_constant, draw_interpolators, Interpolators};
pub use metric::{avg_relative_error, relative_error, ErrorReport};
pub use norm::{MinMax, NormStats};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use train::{
    log_csv, predict_normalized, train_loop, train_loop_with, EpochRecord, Pair, StopReason, TrainConfig,
    TrainReport, TRAIN_KEYS,
};
