use crate::metrics::PageRankResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the analytics engine.
///
/// Every variant maps to a stable `kind()` string that the command-line
/// front end prints on standard error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("malformed row at line {0}")]
    MalformedRow(u64),
    #[error("invalid time point `{value}` at line {line}")]
    InvalidTimePoint { line: u64, value: String },
    #[error("invalid counts: funny={funny}, total={total}")]
    InvalidCounts { funny: i64, total: i64 },
    #[error("duplicate cell ({player}, {time}, {feature}) with conflicting values")]
    DuplicateCell {
        player: String,
        time: String,
        feature: String,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("column {0} has zero variance")]
    DegenerateColumn(usize),
    #[error("K = {k} exceeds the number of points {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("label vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("walk corpus is empty")]
    EmptyCorpus,
    #[error("graph has no edges")]
    NoEdges,
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("power iteration did not converge within {max_iter} iterations")]
    NotConverged {
        max_iter: usize,
        best: Box<PageRankResult>,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("negative duration {value} for node `{node}`")]
    NegativeDuration { node: String, value: f64 },
    #[error("perplexity {perplexity} too large for {n} points (need 3*perplexity < n)")]
    PerplexityTooLarge { perplexity: f64, n: usize },
    #[error("requested {requested} components but the matrix rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "MissingColumn",
            Error::MalformedRow(_) => "MalformedRow",
            Error::InvalidTimePoint { .. } => "InvalidTimePoint",
            Error::InvalidCounts { .. } => "InvalidCounts",
            Error::DuplicateCell { .. } => "DuplicateCell",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::DegenerateColumn(_) => "DegenerateColumn",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::EmptyInput => "EmptyInput",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::NoEdges => "NoEdges",
            Error::AllZeroWeights => "AllZeroWeights",
            Error::NotConverged { .. } => "NotConverged",
            Error::UnknownNode(_) => "UnknownNode",
            Error::NegativeDuration { .. } => "NegativeDuration",
            Error::PerplexityTooLarge { .. } => "PerplexityTooLarge",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }
}
