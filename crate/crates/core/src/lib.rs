//! Adaptive text-region representation for scene text detection.
//!
//! A text instance is represented by a shrunk central region plus the pixel
//! distance needed to grow it back. This crate covers everything around the
//! network: ground-truth label generation, polygon expansion
//! post-processing, the loss suite, IoU-based evaluation and a synthetic
//! prediction harness for end-to-end runs.

pub mod checks;
pub mod cli;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod inference;
pub mod labels;
pub mod losses;
pub mod pipeline;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Point, Polygon};
pub use raster::{BitMask, Grid, LabelGrid};
