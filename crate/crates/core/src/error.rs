use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: non-positive price {price} for {ticker}")]
    NonPositivePrice { line: u64, ticker: String, price: f64 },

    #[error("line {line}: duplicate date {date} for {ticker}")]
    DuplicateDate { line: u64, ticker: String, date: String },

    #[error("series too short: need at least {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("window {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} outside volatility range [{first}, {last}]")]
    IndexOutOfRange { index: usize, first: usize, last: usize },

    #[error("rank-deficient design: column `{column}` is collinear with the others")]
    RankDeficient { column: &'static str },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("gate weights must be non-negative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("naive in-sample MAE is zero; MASE undefined")]
    ZeroNaiveScale,

    #[error("holdout ticker {0} also appears in the training universe")]
    HoldoutOverlap(String),

    #[error("{ticker} fold {fold}: {source}")]
    Task {
        ticker: String,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
