//! Lesion statistics for longitudinal volumetric MRI segmentations.
//!
//! The crate reads NIfTI-1 volumes or stacks of 2D slice masks, labels 3D
//! lesions, registers a follow-up examination onto a baseline, matches
//! lesions across examinations by bounding-cube overlap and renders the
//! resulting reports. A box-restricted threshold tool and segmentation
//! metrics cover the annotation and evaluation side.

pub mod bbts;
pub mod config;
pub mod error;
pub mod labeling;
pub mod matching;
pub mod metrics;
pub mod nifti;
pub mod phantom;
pub mod pipeline;
pub mod registration;
pub mod report;
pub mod slices;
pub mod volume;

pub use error::{Error, Result};
