use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid sonar intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("image data is {rows}x{cols}, intrinsics require {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("degenerate histogram: image has a single intensity value")]
    DegenerateHistogram,
    #[error("kernel dimensions must be odd and positive, got {rows}x{cols}")]
    InvalidKernel { rows: usize, cols: usize },
    #[error("bearing interval [{lo:.4}, {hi:.4}] rad is outside the field of view [{min:.4}, {max:.4}]")]
    IntervalOutsideFov { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("extrapolation refused: t = {t} outside [{start}, {end}]")]
    Extrapolation { t: f64, start: f64, end: f64 },
    #[error("need at least {required} points, got {got}")]
    InsufficientPoints { required: usize, got: usize },
    #[error("point set is collinear")]
    Collinear,
    #[error("point set has different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no values remain after trimming")]
    EmptyAfterTrim,
    #[error("zero variance: bandwidth cannot be selected automatically")]
    ZeroVariance,
    #[error("bins do not match: {0}")]
    BinMismatch(String),
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed {what} in {path}: {reason}")]
    Format {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format {
            what,
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
