//! Post-processing for weakly supervised sound event detection.
//!
//! Turns frame-level class probabilities into timed events: smoothing,
//! eight segmentation methods (data-wise average thresholds and
//! absolute/hysteresis/slope rules, each class-independent or
//! class-dependent), merging and pruning, event-based scoring, and
//! grid / dichotomic parameter search.

pub mod config;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod optimizer;
pub mod segmentation;
pub mod smoothing;
pub mod synthgen;
pub mod types;

pub use config::{ClassParams, Family, Method, Parameters, Rule, SegmenterConfig, SlopeParams};
pub use dataio::WeakTags;
pub use error::{Error, Result};
pub use metrics::{Collars, Counts, ScoreReport};
pub use optimizer::{ParameterSpace, SearchResult};
pub use segmentation::DatasetThresholds;
pub use types::{AnnotationSet, ClipPrediction, Event, EventList, Segment};
