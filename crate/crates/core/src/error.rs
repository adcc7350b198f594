use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("theta = {0} lies outside [0, 1]")]
    ThetaOutOfRange(f64),

    #[error("non-hermitian scheme: {0}")]
    NonHermitian(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("state index {0} outside the supported range 0..=12")]
    StateIndex(usize),

    #[error("|eps| vanished at t = {0}")]
    VanishingEpsilon(f64),

    #[error("interpolation out of bounds: {0}")]
    OutOfBounds(String),

    #[error("tag mismatch: {0}")]
    TagMismatch(String),

    #[error("insufficient support: {0}")]
    InsufficientSupport(String),

    #[error("angular undersampling: {0}")]
    AngularUndersampling(String),

    #[error("ray exits the sampled band: {0}")]
    RayExitsGrid(String),

    #[error("omega band too narrow: hermiticity defect {0:e}")]
    BandTooNarrow(f64),

    #[error("per-step displacement of {0:.3} cells exceeds the limit of 2")]
    CflExceeded(f64),

    #[error("characteristic left the grid: {0}")]
    CharacteristicLeftGrid(String),

    #[error("aliasing: {0:e} of spectral energy in the top third")]
    Aliasing(f64),

    #[error("theta node {node} (theta = {theta}): {source}")]
    Node {
        node: usize,
        theta: f64,
        source: Box<Error>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("drive: {0}")]
    Drive(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{0}")]
    Config(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
