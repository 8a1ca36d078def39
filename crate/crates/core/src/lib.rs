//! Prediction-based control of one-dimensional maps under bounded random
//! perturbations: map registry, noise streams, transition kernels, stability
//! conditions, Monte Carlo ensembles and a config-driven CLI.

mod numeric;

pub mod analysis;
pub mod cli;
pub mod config;
pub mod control;
pub mod maps;
pub mod noise;
pub mod simulate;
