//! Conditional VAE toolkit for affective robot body language: keyframe
//! preprocessing, a hand-written CVAE with its own training loop, geometric
//! latent sampling on horn tori, motion metrics and an HTTP facade.

pub mod anim;
pub mod cli;
pub mod cvae;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod preprocess;
pub mod sampler;
pub mod service;
pub mod synthetic;

pub use error::{Error, Result};
