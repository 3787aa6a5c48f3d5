//! Probability-space clustering.
//!
//! Clusters are summarised as probability spaces: a center (the maximum
//! probability value) plus a per-dimension probability scale. Distances
//! between vectors and spaces ignore whatever falls inside the scales. The
//! clustering pipeline partitions the data by vector norm, fits a space per
//! region, exchanges points between neighbouring regions, merges overlapping
//! spaces, and keeps halving regions until a stopping rule fires.
//!
//! ```
//! use probclust_core::{cluster, assign, EngineConfig, FeatVec};
//!
//! let points: Vec<FeatVec> = [0.0, 0.2, 0.1, 9.8, 10.0, 10.1]
//!     .iter()
//!     .map(|&x| FeatVec::new(vec![x]).unwrap())
//!     .collect();
//! let cfg = EngineConfig {
//!     target_k: Some(2),
//!     ..EngineConfig::default()
//! };
//! let model = cluster(&points, &cfg).unwrap();
//! assert_eq!(model.cluster_count(), 2);
//! let hit = assign(&[10.05], &model).unwrap();
//! assert!(hit.inside);
//! ```

pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fit;
pub mod metric;

pub use engine::{
    assign, boundary_exchange, cluster, initial_partition, merge_overlapping, split_all,
    Assignment, ClusterModel, EngineConfig, Exchange, MergeEvent, Region,
};
pub use error::{Error, Result};
pub use fit::{fit_max_prob_space, has_converged, FitTrace, SdlConfig};
pub use metric::{
    check_metric_axioms, check_triangle_vertices, point_space_distance, random_spaces,
    scale_from_samples, space_overlap_gap, space_space_distance, triangle_vertices, AxiomReport,
    DegenerateCase, FeatVec, PlanarSpace, ProbSpace, TriangleReport, TriangleVertices,
};
