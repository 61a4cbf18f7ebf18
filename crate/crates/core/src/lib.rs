//! Decoder confidence scores for surface-code decoding windows.
//!
//! The crate builds unrotated surface-code decoding graphs, decodes them
//! with minimum-weight perfect matching, scores each decoding with the
//! complementary gap and the swim distance, calibrates those scores into
//! logical error probabilities and uses the result for whole-circuit
//! error mitigation (abort protocols and maximum-likelihood estimation).

pub mod calibration;
pub mod confidence;
pub mod decoder;
pub mod error;
pub mod graph;
pub mod mle;
pub mod multiwindow;
pub mod noise;
pub mod pipeline;
pub mod scale_model;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{DecodingGraph, Edge, NoiseModel};
