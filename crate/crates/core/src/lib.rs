//! Two-stage intrusion detection for UAV cyber traffic.
//!
//! A dense autoencoder compresses the preprocessed cyber features to a small
//! latent code, and classical classifiers (decision tree, random forest,
//! k-nearest neighbours, MLP, linear SVM) are trained on that code for binary
//! and multi-class attack detection.

pub mod autoencoder;
pub mod numkernel;
pub mod persist;
pub mod dataset;
pub mod metrics;
pub mod classifiers;
pub mod pipeline;
pub mod synth;
