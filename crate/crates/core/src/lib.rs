//! Marketplace seller fraud detection.
//!
//! The pipeline runs seller history through feature extraction and min-max
//! scaling into a soft-margin SVM trained with SMO, evaluates a weighted
//! rules engine over the same features, checks the seller against a
//! reputation store, and fuses those signals with expert verdicts into a
//! [`detection::FraudVerdict`]. [`management`] maps verdicts to actions.

pub mod cli;
pub mod data;
pub mod detection;
pub mod error;
pub mod features;
pub mod management;
pub mod model_file;
pub mod ndjson;
pub mod pipeline;
pub mod rules;
pub mod svm;

pub use error::{Error, Result};
