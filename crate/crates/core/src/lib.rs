//! Game-theoretic document clustering.
//!
//! The pipeline turns a corpus into a similarity graph, seeds clusters by
//! peeling off dominant sets, and assigns the remaining documents by running
//! an evolutionary clustering game to a Nash equilibrium. Scenarios with a
//! known cluster count, an unknown count (over-segment then merge), and
//! streaming arrival are all supported, together with accuracy and
//! normalized-mutual-information scoring against ground truth.

pub mod corpus;
pub mod dominant;
pub mod error;
pub mod evaluation;
pub mod games;
pub mod graph;
pub mod harness;
pub mod weighting;

pub use corpus::{CorpusStats, DocumentTermMatrix, LabelSet};
pub use dominant::{DominantSet, DominantSetConfig, SeedClustering, StopRule};
pub use error::{Error, Result, Stage};
pub use evaluation::EvalReport;
pub use games::{ClusterMergeResult, GameConfig, GameResult, PlayerPartition, StrategySpace};
pub use graph::{GraphKind, SimilarityGraph};
pub use harness::{ExperimentConfig, Mode, StaticReport, StreamReport, WeightingChoice};
pub use weighting::FeatureMatrix;
