//! Incremental ensemble learning for dissolved-gas-analysis (DGA) bushing
//! condition monitoring.
//!
//! The crate is `no_std` (with `alloc`) and carries only the numerical
//! machinery: feature extraction, a seeded synthetic data generator, three
//! classifiers (MLP, RBF network, kernel SVM), the Learn++ ensemble with its
//! confidence measure, and the two-level diagnosis pipeline. File formats,
//! experiment orchestration and the command line live in the `bushing` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classifier;
pub mod cv;
pub mod datagen;
pub mod diagnosis;
pub mod error;
pub mod features;
pub mod learnpp;
mod math;
pub mod mlp;
pub mod optim;
pub mod rbf;
pub mod rng;
pub mod svm;

pub use classifier::{Classify, Model};
pub use error::{Error, Result};
