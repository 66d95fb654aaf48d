//! Physics-constrained convolutional autoencoder: architecture, layers with
//! hand-written backpropagation, data and optical-constant losses, Adam
//! training, gradient checking and latent feature maps.

mod arch;
mod dd;
mod gradcheck;
mod io;
mod latent;
mod layers;
mod loss;
mod network;
mod train;

pub use arch::{Architecture, ParamLayout, Tensor};
pub use gradcheck::{gradient_check, reduced_setup, GradCheckReport, FD_STEP};
pub use io::{read_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use latent::{encode_cube, latent_map, latent_maps, latent_order, LatentOrder};
pub use loss::{lambda, loss_data, loss_total, PhysicsContext, PhysicsTerms};
pub use network::{Pcnn, Tape};
pub use train::{
    batch_gradient, clip_grad_norm, init_model, train, write_log_csv, Adam, BatchGradient, EpochLog, StepReport,
    TrainConfig, Trainer,
};
