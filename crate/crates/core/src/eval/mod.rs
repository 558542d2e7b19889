//! Downstream evaluation: linear probe, k-means clustering, matching accuracy,
//! NMI and silhouette.

mod kmeans;
mod metrics;
mod probe;
mod silhouette;

pub use kmeans::{kmeans, kmeans_single, kmeans_with, KMeansConfig, KMeansRun};
pub use metrics::{
    best_matching_assignment, best_matching_exhaustive, clustering_accuracy, contingency,
    f1_scores, nmi, Metric, MetricTable, Partition,
};
pub use probe::{linear_probe, ProbeConfig, ProbeOutcome};
pub use silhouette::silhouette;
