use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("frame condition violated: max deviation {deviation:.3e}")]
    FrameViolated { deviation: f64 },

    #[error("local basis is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("no annihilating filter: lifted matrix has full column rank {rank}")]
    NoAnnihilator { rank: usize },

    #[error("insufficient channels: lifted rank {rank} exceeds {channels} available channels")]
    InsufficientChannels { rank: usize, channels: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: Vec<f64> },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}
