//! GCN-MLP dual-view graph contrastive learning, with a laboratory for the feature-noise and
//! structural-noise correlation analysis that motivates it.

pub mod error;
pub mod evaluation;
pub mod encoders;
pub mod graph;
pub mod training;
pub mod noise;
pub mod numerics;
pub mod robustness;
pub mod synth;

pub use error::{Error, Result};
