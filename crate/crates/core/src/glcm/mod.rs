//! Grayscale image preprocessing and Haralick texture features.
//!
//! The per-image pipeline is: [`median_filter`] to suppress noise,
//! [`remove_background`] (Otsu threshold plus largest bright component),
//! optional [`segment_image`] into overlapping horizontal bands, and
//! [`extract_features`] producing 13 Haralick statistics for each of four
//! co-occurrence orientations.

mod cooccurrence;
mod image;
mod pgm;
mod preprocess;

pub use cooccurrence::{
    compute_glcm, extract_features, feature_names, haralick13, FeatureVector52, GlcmMatrix, HARALICK_NAMES,
    ORIENTATIONS,
};
pub use image::GrayImage;
pub use pgm::{encode_pgm, parse_pgm, read_pgm, write_pgm};
pub use preprocess::{median_filter, otsu_threshold, remove_background, segment_image, Segments};

/// Default quantisation bin count.
pub const DEFAULT_LEVELS: usize = 16;
/// Default fractional band overlap for segmentation.
pub const DEFAULT_OVERLAP: f64 = 0.1;
/// Default median window.
pub const DEFAULT_MEDIAN_WINDOW: usize = 3;
