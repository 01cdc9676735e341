//! Face identification by local binary decisions on feature similarity.
//!
//! The pipeline has two halves. Feature extraction runs a bank of small
//! texture kernels over a grayscale face, measures local spatial change with a
//! standard-deviation filter, and normalizes each response by its local mean.
//! Classification compares a probe against every gallery entry pixel by pixel,
//! thresholds the averaged relative difference into binary decisions, and
//! counts the similar pixels. The gallery entry with the most similar pixels
//! wins.
//!
//! Galleries come in two flavours: exemplar (every enrolled image kept) and
//! average (one mean feature model per subject). Probe misalignment is handled
//! by trying a small set of shifted copies of the probe and keeping the best
//! score per gallery entry.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod features;
pub mod gallery;
pub mod imgproc;

pub use classifier::{ClassifierParams, MatchEntry, MatchResult, Score};
pub use error::{Error, Result};
pub use features::{
    FeatureExtractor, FeatureParams, FeatureVector, FilterBank, Kernel, Plane, Window,
};
pub use gallery::{Gallery, GalleryEntry, GalleryModel, ManifestEntry, Role};
pub use imgproc::{EyeCoordinates, Image, Perturbation};
