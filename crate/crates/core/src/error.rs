use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown channel label `{0}`")]
    UnknownChannel(String),
    #[error("missing channel {0}")]
    MissingChannel(String),
    #[error("intent timeline invalid: {0}")]
    InvalidTimeline(String),
    #[error("signal of length {len} is shorter than the {filter_len}-tap filter")]
    SignalTooShort { len: usize, filter_len: usize },
    #[error("decomposition depth {depth} exceeds the maximum {max} for this signal")]
    DepthTooLarge { depth: usize, max: usize },
    #[error("node (level {level}, index {index}) does not exist")]
    NodeOutOfRange { level: usize, index: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("window has {got} samples, expected {expected}")]
    WrongWindowLength { got: usize, expected: usize },
    #[error("feature vector has dimension {got}, expected {expected}")]
    WrongDimension { got: usize, expected: usize },
    #[error("training data has a single class")]
    SingleClass,
    #[error("class {0} absent from a training fold")]
    ClassAbsentFromFold(String),
    #[error("dataset invalid: {0}")]
    InvalidDataset(String),
    #[error("buffer holds {have:.3} s, need {need:.3} s")]
    BufferUnderrun { have: f64, need: f64 },
    #[error("map parse error on line {line}: {msg}")]
    MapParse { line: usize, msg: String },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("profile config: {0}")]
    Profile(String),
    #[error("model format: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
