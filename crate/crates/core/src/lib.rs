//! Cardiac label-volume repair, Laplace wall-thickness measurement and
//! segmentation agreement statistics.

pub mod cohort;
mod error;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod repair;
pub mod report;
pub mod thickness;
pub mod volume;

pub use error::{Error, Result};
