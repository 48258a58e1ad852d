//! Toy federated training: datasets, partitioning, local SGD, global
//! updates and evaluation.

mod dataset;
pub mod idx;
mod model;
mod partition;
mod train;

pub use dataset::{Dataset, SyntheticSpec};
pub use model::{ModelKind, ModelShape};
pub use partition::{partition, partition_indices, PartitionMode, PartitionSpec};
pub use train::{evaluate, global_update, local_update, TrainSpec};
