use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("file {0} is empty")]
    EmptyFile(PathBuf),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric value `{value}` at row {row}, column {column}")]
    NonNumericValue { row: usize, column: usize, value: String },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("class {class} has {count} samples, at least 2 required")]
    DegenerateClass { class: u8, count: usize },
    #[error("labels are not hard 0/1 values")]
    SoftLabelsPresent,
    #[error("dataset contains a single class")]
    SingleClassDataset,

    #[error("median window must be odd, got {0}")]
    EvenWindow(usize),
    #[error("window {window} exceeds image dimension {dim}")]
    WindowTooLarge { window: usize, dim: usize },
    #[error("no pixel exceeds the Otsu threshold")]
    NoForeground,
    #[error("image height {0} too small to segment")]
    ImageTooSmall(usize),
    #[error("no pixel pairs for offset ({dy}, {dx})")]
    NoValidPairs { dy: i32, dx: i32 },
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("minority class has {0} samples, at least 2 required")]
    DegenerateMinority(usize),
    #[error("need more than {k} samples for nearest-neighbour cleaning, got {n}")]
    TooFewSamples { n: usize, k: usize },
    #[error("invalid augmentation config: {0}")]
    InvalidAugmentConfig(String),
    #[error("unknown augmentation method `{0}`")]
    UnknownMethod(String),

    #[error("grammar syntax error at line {line}, column {column}: {message}")]
    GrammarSyntax { line: usize, column: usize, message: String },
    #[error("undefined non-terminal <{0}>")]
    UndefinedNonTerminal(String),
    #[error("start symbol <{0}> has no finite derivation")]
    UnreachableStart(String),
    #[error("non-terminal <{0}> has no finite derivation")]
    NonTerminating(String),
    #[error("maximum initial depth {requested} below the grammar minimum {minimum}")]
    DepthInfeasible { requested: usize, minimum: usize },
    #[error("cannot parse expression `{0}`")]
    BadExpression(String),
    #[error("feature index {index} out of range for row of length {len}")]
    FeatureIndexOutOfRange { index: usize, len: usize },

    #[error("invalid GE config: {0}")]
    InvalidGeConfig(String),

    #[error("singular covariance matrix")]
    SingularCovariance,
    #[error("need at least 3 models, got {0}")]
    TooFewModels(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("run count mismatch: {left} has {left_runs}, {right} has {right_runs}")]
    RunCountMismatch { left: String, left_runs: usize, right: String, right_runs: usize },

    #[error("config error: {0}")]
    Config(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
