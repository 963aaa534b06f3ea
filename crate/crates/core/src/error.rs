use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("momentum k = {k} is not on the grid π(2n+1)/{n_qubits}")]
    OffGridMomentum { k: f64, n_qubits: usize },

    #[error("requested {requested} levels but the reduced space has dimension {dimension}")]
    TooManyLevels { requested: usize, dimension: usize },

    #[error("eigensolver failed at λ = {lambda}: {reason}")]
    Eigensolver { lambda: f64, reason: String },

    #[error("integrator failed at {at}: {reason}")]
    Integrator { at: f64, reason: String },

    #[error("λ = {lambda} is outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { lambda: f64, lo: f64, hi: f64 },

    #[error("dimension {dimension} exceeds the direct-integration cap of {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("negative heating {value} at λ = {lambda}")]
    NegativeHeating { value: f64, lambda: f64 },

    #[error("level-count mismatch: state has {state}, snapshot has {snapshot}")]
    LevelMismatch { state: usize, snapshot: usize },

    #[error("scaling analysis: {0}")]
    Scaling(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
