//! Simulator for over-the-air federated edge learning assisted by a
//! reconfigurable intelligent surface (RIS).
//!
//! The crate is organized along the data path of one training round:
//!
//! - [`channel`]: fading channels and the RIS cascade
//! - [`aircomp`]: channel-inversion power control and analog aggregation
//! - [`ris_opt`]: phase-shift and beamformer optimization
//! - [`selection`]: device selection and the communication/learning objective
//! - [`fedlearn`]: datasets, partitioning, local SGD, global updates
//! - [`privacy`]: artificial-noise mechanism and a leakage proxy
//! - [`harness`]: configuration, experiment runs, CSV traces, plots

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aircomp;
pub mod channel;
pub mod error;
pub mod fedlearn;
pub mod harness;
pub mod linalg;
pub mod privacy;
pub mod ris_opt;
pub mod rng;
pub mod selection;
pub mod vector;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::Stream;
pub use vector::ModelVector;
