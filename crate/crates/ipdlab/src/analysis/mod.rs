//! Post-hoc analysis of trial batches: feature extraction, correlations,
//! clustering, and random-forest importance.

pub mod cluster;
pub mod features;
pub mod forest;
pub mod sse;
pub mod stats;

pub use cluster::{kmeans_silhouette, mean_silhouette, threshold_labels, ClusterError, THRESHOLDS};
pub use features::{
    build_feature_matrix, compute_features, memory_usage, winner_stats, FeatureMatrix,
    FeatureVector, WinnerStats,
};
pub use forest::{
    forest_fit, forest_importance, forest_predict, forest_score, train_test_split, ForestConfig,
    ForestError, ForestModel,
};
pub use sse::{fit_zd, sse_to_zd, ZdFit};
pub use stats::{correlation_matrix, correlation_table, pearson, CorrelationMatrix, CorrelationTable};
