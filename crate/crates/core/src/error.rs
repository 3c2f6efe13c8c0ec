use std::path::PathBuf;

/// Errors raised anywhere in the laboratory pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular (pivot {pivot} at step {step})")]
    SingularMatrix { step: usize, pivot: f64 },
    #[error("matrix is rank deficient (|R_{index}{index}| = {value:e})")]
    RankDeficient { index: usize, value: f64 },
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("mesh size {h} too coarse for wall thickness {wall}")]
    Resolution { h: f64, wall: f64 },
    #[error("PML stretch evaluated outside the open domain at {0}")]
    Domain(f64),
    #[error("partition error: {0}")]
    Partition(String),
    #[error("deflation setup failed: {0}")]
    DeflationSetup(String),
    #[error("harmonic Ritz values undefined at iteration {0} (singular H_l)")]
    HrUndefined(usize),
    #[error("rational factor has a pole at {0}")]
    Pole(String),
    #[error("bound unavailable: {0}")]
    BoundUnavailable(String),
    #[error("operator of size {size} exceeds the dense eigensolver cap {cap}; use a smaller mesh")]
    Size { size: usize, cap: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
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

    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
