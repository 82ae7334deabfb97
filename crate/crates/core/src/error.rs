use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate actuator geometry: allocation matrix has rank {rank} < 6")]
    DegenerateGeometry { rank: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("optimal control problem produced a non-finite iterate")]
    NonFiniteIterate,

    #[error("non-finite controller state")]
    NonFiniteState,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
