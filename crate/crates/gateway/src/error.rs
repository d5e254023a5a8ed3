use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Core(#[from] chair_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("unknown subject profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("a replay session needs a recording")]
    MissingRecording,
    #[error("session is replaying a recording and accepts no input")]
    Replaying,
    #[error("session has ended")]
    SessionEnded,
}

pub type Result<T> = std::result::Result<T, GatewayError>;
