//! Synthetic myocardial scar augmentation for LGE cardiac MRI.
//!
//! Slices are resampled, cropped and normalized ([`preprocess`]), rotated so
//! the RV insertion points line up ([`orientation`]), partitioned into AHA
//! segments and wall layers ([`anatomy`]), and optionally given a synthetic
//! scar with a matching caption ([`synth`], [`captions`]). [`contrastive`]
//! holds the scoring math for image/text embeddings.

pub mod anatomy;
pub mod captions;
pub mod contrastive;
pub mod dataset;
pub mod error;
pub mod label;
pub mod orientation;
pub mod phantoms;
pub mod pipeline;
pub mod preprocess;
pub mod raster;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use label::Label;
