use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The clustering-threshold loop ran past the level cap.
    #[error(
        "tree construction failed: a box still holds {max_count} points (CT = {ct}) at the level cap {level_cap}"
    )]
    ConstructionFailure {
        ct: usize,
        level_cap: u32,
        max_count: usize,
    },

    #[error("layout corrupt: {0}")]
    LayoutCorrupt(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
