//! Metamorphic testing for image captioning systems.
//!
//! Objects cut from segmentation annotations are inserted into annotated
//! background images at controlled overlap ratios; captions of the original
//! and synthesized images are then compared under two relations over the
//! mentioned object classes and their singular/plural form.

pub mod analysis;
pub mod audit;
pub mod error;
pub mod geometry;
pub mod insertion;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod pool;
pub mod provider;
pub mod report;

pub use error::{Error, Result};
