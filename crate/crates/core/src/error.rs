use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),

    #[error("expected exactly two label classes, found {0}")]
    ClassCount(usize),

    #[error("column `{0}` has no observed values")]
    EmptyColumn(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("class {class} has {count} samples, need at least {needed}")]
    ClassTooSmall {
        class: u8,
        count: usize,
        needed: usize,
    },

    #[error("feature selection removed every column")]
    EmptySelection,

    #[error("{0} qubits exceeds the simulation limit of {1}")]
    TooManyQubits(usize, usize),

    #[error("index {index} out of range for {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step count {0} exceeds the supported maximum")]
    StepOverflow(f64),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("kernel matrix is not positive semidefinite (min eigenvalue {min_eig:e}, trace {trace:e})")]
    NotPsd { min_eig: f64, trace: f64 },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("AUC is undefined when the true labels contain a single class")]
    UndefinedAuc,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
