use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("tailoring removed every attribute")]
    EmptyModel,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("too few rows: need at least {needed}, have {available}")]
    TooFewRows { needed: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset has no {0} column")]
    MissingColumn(&'static str),
    #[error("no comparable columns between datasets")]
    NoComparableColumns,
    #[error("dataset has no numeric columns")]
    NoNumericColumns,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("rule references unknown column '{0}'")]
    UnknownColumnInRule(String),
    #[error("label is not binary: {0}")]
    NonBinaryLabel(String),

    #[error("no labeled rows")]
    NoLabeledRows,
    #[error("retrain set is not k-fold")]
    NotKFold,
    #[error("too few folds: {0}")]
    TooFewFolds(usize),
    #[error("retrain set is not leave-one-out")]
    NotLeaveOneOut,
    #[error("instance id mismatch: {0}")]
    IdMismatch(String),
    #[error("clean accuracy is zero")]
    ZeroCleanAccuracy,
    #[error("no group has both positive and negative instances")]
    NoEligibleGroups,
    #[error("prediction table has no supervisor flags")]
    MissingSupervisorFlags,
    #[error("prediction table has no context-change flags")]
    MissingContextFlags,

    #[error("no resource log entries for phase '{0}'")]
    NoEntriesForPhase(String),
    #[error("checklist evidence references unknown item '{0}'")]
    UnknownItemId(String),

    #[error("training data has a single class")]
    SingleClass,
    #[error("training data is empty")]
    EmptyTraining,
    #[error("bad fold count {k} for {n} rows")]
    BadFoldCount { k: usize, n: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
