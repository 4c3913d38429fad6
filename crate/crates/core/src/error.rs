use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("ball radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("ball (z0 = {z0}, lambda = {lambda}) contains no grid node")]
    BallOutsideGrid { z0: f64, lambda: f64 },

    #[error("scale {lambda} is below resolution (needs at least {min})")]
    BelowResolution { lambda: f64, min: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shell index {k} outside partition range [{k_min}, {k_max}]")]
    ShellOutOfRange { k: i32, k_min: i32, k_max: i32 },

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("CFL violation: max|u| dt = {courant:.3e} exceeds {limit:.3e}")]
    Cfl { courant: f64, limit: f64 },

    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
