//! Error type shared across the pipeline, tagged by the stage that produced it.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage an error originated from. Used for exit codes and log tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Corpus,
    Weighting,
    Graph,
    Dominant,
    Games,
    Evaluation,
    Harness,
    Io,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Corpus => "corpus",
            Stage::Weighting => "weighting",
            Stage::Graph => "graph",
            Stage::Dominant => "dominant",
            Stage::Games => "games",
            Stage::Evaluation => "evaluation",
            Stage::Harness => "harness",
            Stage::Io => "io",
        }
    }

    /// Stable nonzero process exit code for CLI error reporting.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Io => 1,
            Stage::Corpus => 2,
            Stage::Weighting => 3,
            Stage::Graph => 4,
            Stage::Dominant => 5,
            Stage::Games => 6,
            Stage::Evaluation => 7,
            Stage::Harness => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // corpus
    #[error("line {line}: malformed header, expected `n_docs n_terms nnz`")]
    MalformedHeader { line: usize },
    #[error("line {line}: expected `col value` pairs, found odd token count")]
    OddPairTokens { line: usize },
    #[error("line {line}: column {col} out of range 1..={n_terms}")]
    ColumnOutOfRange { line: usize, col: usize, n_terms: usize },
    #[error("line {line}: duplicate column {col} in document row")]
    DuplicateColumn { line: usize, col: usize },
    #[error("line {line}: negative count {value}")]
    NegativeCount { line: usize, value: f64 },
    #[error("line {line}: unparsable token `{token}`")]
    BadToken { line: usize, token: String },
    #[error("nonzero count mismatch: header declared {expected}, rows carry {found}")]
    NnzMismatch { expected: usize, found: usize },
    #[error("line {line}: unexpected end of input, expected {expected} document rows")]
    UnexpectedEof { line: usize, expected: usize },
    #[error("line {line}: trailing content after the declared document rows")]
    TrailingContent { line: usize },
    #[error("corpus has no documents")]
    NoDocuments,
    #[error("corpus has no terms")]
    NoTerms,
    #[error("tokenization produced an empty vocabulary")]
    EmptyVocabulary,
    #[error("frequency filter dropped every column (min_total = {min_total})")]
    AllColumnsDropped { min_total: f64 },
    #[error("line {line}: empty label")]
    EmptyLabel { line: usize },
    #[error("label count {found} does not match document count {expected}")]
    LabelCountMismatch { expected: usize, found: usize },

    // weighting
    #[error("no document contains any term; tf-idf is undefined")]
    NoOccurrences,
    #[error("projection rank must be at least 1")]
    BadRank,
    #[error("requested rank {requested} exceeds max {max}")]
    RankTooLarge { requested: usize, max: usize },
    #[error("feature cache line {line}: {msg}")]
    FeatureCache { line: usize, msg: String },

    // graph
    #[error("zero-norm feature rows at document indices {indices:?}")]
    ZeroNormRows { indices: Vec<usize> },
    #[error("graph kind mismatch: expected {expected}, found {found}")]
    GraphKindMismatch { expected: &'static str, found: &'static str },
    #[error("sigma must be positive and finite, got {sigma}")]
    BadSigma { sigma: f64 },
    #[error("epsilon must be nonnegative and finite, got {epsilon}")]
    BadEpsilon { epsilon: f64 },
    #[error("k must be at least 1 for k-nn sparsification")]
    BadKnn,
    #[error("nodes with zero degree: {nodes:?}")]
    ZeroDegree { nodes: Vec<usize> },
    #[error("graph cache line {line}: {msg}")]
    GraphCache { line: usize, msg: String },

    // dominant sets
    #[error("active set is empty")]
    EmptyActiveSet,
    #[error("no cohesive structure in the active set (payoff sums to zero)")]
    NoCohesiveStructure,
    #[error("requested {requested} clusters but only {found} could be extracted")]
    FewerThanK { requested: usize, found: usize },

    // games
    #[error("graph has {graph_n} nodes but partition describes {partition_n} players")]
    PlayerCountMismatch { graph_n: usize, partition_n: usize },
    #[error("partition needs at least one strategy (k >= 1)")]
    NoStrategies,
    #[error("labeled class {class} out of range for k = {k}")]
    ClassOutOfRange { class: usize, k: usize },
    #[error("strategy space is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    StrategyShapeMismatch { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("cluster merge received no seed clusters")]
    NoSeeds,
    #[error("cluster merge requested {requested} classes but only {found} seeds exist")]
    TooFewSeeds { requested: usize, found: usize },
    #[error("cluster merge requires every document to sit in a seed; {count} residual documents remain")]
    ResidualDocuments { count: usize },

    // evaluation
    #[error("prediction has {pred_len} labels but ground truth has {truth_len}")]
    LabelLengthMismatch { pred_len: usize, truth_len: usize },
    #[error("cannot evaluate an empty labeling")]
    EmptyLabeling,

    // harness
    #[error("harness configuration error: {msg}")]
    BadConfig { msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Pipeline stage this error belongs to.
    pub fn stage(&self) -> Stage {
        use Error::*;
        match self {
            MalformedHeader { .. } | OddPairTokens { .. } | ColumnOutOfRange { .. }
            | DuplicateColumn { .. } | NegativeCount { .. } | BadToken { .. }
            | NnzMismatch { .. } | UnexpectedEof { .. } | TrailingContent { .. }
            | NoDocuments | NoTerms | EmptyVocabulary | AllColumnsDropped { .. }
            | EmptyLabel { .. } | LabelCountMismatch { .. } => Stage::Corpus,

            NoOccurrences | BadRank | RankTooLarge { .. } | FeatureCache { .. } => Stage::Weighting,

            ZeroNormRows { .. } | GraphKindMismatch { .. } | BadSigma { .. }
            | BadEpsilon { .. } | BadKnn | ZeroDegree { .. } | GraphCache { .. } => Stage::Graph,

            EmptyActiveSet | NoCohesiveStructure | FewerThanK { .. } => Stage::Dominant,

            PlayerCountMismatch { .. } | NoStrategies | ClassOutOfRange { .. }
            | StrategyShapeMismatch { .. } | NoSeeds | TooFewSeeds { .. }
            | ResidualDocuments { .. } => Stage::Games,

            LabelLengthMismatch { .. } | EmptyLabeling => Stage::Evaluation,

            BadConfig { .. } => Stage::Harness,

            Io(_) => Stage::Io,
        }
    }
}
