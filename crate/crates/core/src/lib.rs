//! Count-Sketch and Count-Min sketches with median and median-of-medians
//! estimators, the point and top-k error metrics used to evaluate them, and
//! a small lab for checking the concentration lemmas they rest on.
//!
//! ```
//! use countsketch::{estimate_vector, CountSketchTable, SketchConfig};
//!
//! let x = [10.0, 0.5, -3.0, 0.0, 1.0];
//! let config = SketchConfig::count_sketch(7, 16, 42).unwrap();
//! let table = CountSketchTable::from_vector(config, &x).unwrap();
//! let est = estimate_vector(&table, x.len()).unwrap();
//! assert!((est.values[0] - 10.0).abs() <= 4.5);
//! ```

pub mod concentration;
pub mod error;
pub mod estimators;
pub mod hashing;
pub mod metrics;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod signals;
pub mod sketch;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{
    estimate_vector, estimate_vector_countmin, estimate_vector_median_of_medians, median,
    median_of_medians_estimate, point_estimate, point_estimate_countmin, top_k_indices,
    EstimateVector, EstimatorKind, PartitionScheme,
};
pub use hashing::{derive_seed, hash_column, hash_sign, HashKey, RowHasher};
pub use metrics::{m_value, topk_error, IndexPolicy};
pub use signals::{SignalKind, SignalSpec};
pub use sketch::{CountMinTable, CountSketchTable, SketchConfig, SketchKind, Table};
