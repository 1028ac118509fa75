//! Window feedforward tagger with a clean softmax head and an optional
//! confusion-matrix head for noisy labels, trained with NADAM.
//!
//! The network sees the embeddings of a token and `w` neighbors on each
//! side, applies one `tanh` hidden layer and a softmax over the IO labels.
//! Noisy instances multiply that distribution by the confusion matrix of
//! their word cluster before the likelihood is taken.

mod features;
mod model;
mod nadam;
mod train;

pub use features::{Featurizer, Instance, Source};
pub use model::{batch_loss_and_grads, loss_and_grads, Batch, Gradients, TaggerModel};
pub use nadam::Nadam;
pub use train::{evaluate, train, Checkpoint, EpochRecord, Strategy, TrainConfig, TrainOutcome, CHECKPOINT_VERSION};
