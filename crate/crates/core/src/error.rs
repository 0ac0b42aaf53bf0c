use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite command: {0}")]
    NonFiniteCommand(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite state at step {step}: ({x1}, {x2})")]
    NonFiniteState { step: usize, x1: f64, x2: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
