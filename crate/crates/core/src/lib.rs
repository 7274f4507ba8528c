//! Unimodular waveform design with a bounded delay-Doppler ambiguity function
//! over a continuous Doppler band.

pub mod cli;
pub mod detect;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod sdp;
pub mod srocr;
pub mod trigpoly;

pub use error::{Error, Result};
