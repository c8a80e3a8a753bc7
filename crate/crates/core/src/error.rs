use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("channel mismatch: expected {expected} channel(s), got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("image too small: {0}")]
    ImageTooSmall(String),
    #[error("bit strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("kernel dimensions must be odd, got {0}x{1}")]
    EvenKernel(usize, usize),
    #[error("window size must be odd and at least 3, got {0}")]
    EvenWindow(usize),
    #[error("block size must be odd and at least 3, got {0}")]
    EvenBlock(usize),
    #[error("dimensions must be even, got {0}x{1}")]
    OddDimensions(usize, usize),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("contrast factor must be positive, got {0}")]
    NonPositiveContrast(f64),
    #[error("sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("transform is singular")]
    SingularTransform,
    #[error("degenerate quad: {0}")]
    DegenerateQuad(String),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("points do not form a convex quad")]
    NonConvex,
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("canny thresholds must satisfy 0 < low < high (got {low}, {high})")]
    BadThresholds { low: f64, high: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("localization failed at stage `{stage}`: {reason}")]
    LocalizationFailed { stage: &'static str, reason: String },
    #[error("segment has zero variance")]
    ZeroVariance,
    #[error("residual is too narrow for symmetry analysis ({0} < 8)")]
    TooNarrow(usize),
    #[error("no symmetry axis found")]
    NoSymmetryFound,
    #[error("payload must be {expected} bits, got {actual}")]
    PayloadLengthMismatch { expected: usize, actual: usize },
    #[error("pattern bank failed the orthogonality check (max |corr| = {0:.4})")]
    OrthogonalityViolation(f64),
    #[error("decoding failed: {0}")]
    DecodeFailed(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
