//! Biaffine shortcut-attention graph convolution for semi-supervised node
//! classification, built on a small dense/sparse tensor core with a
//! reverse-mode tape.
//!
//! The crate's runnable examples (`cargo run --example <name>`) walk through
//! each capability; the `bagcn` binary wraps the same functions for batch
//! experiments.

pub mod analysis;
pub mod baseline;
pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Graph, SplitMasks};
pub use model::{BiaffineMode, Fusion, ModelConfig, ModelParams, NormKind};
pub use tape::{Tape, Var};
pub use tensor::{SparseMatrix, Tensor};
pub use train::{train, TrainReport};
