use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("detector {0} cannot reach a boundary")]
    Disconnected(usize),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("invalid variance decomposition: s_phi^2 = {s_phi_sq:.6e} <= s_r^2 = {s_r_sq:.6e}")]
    InvalidDecomposition { s_phi_sq: f64, s_r_sq: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {msg}", path.display())]
    Schema { path: PathBuf, msg: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for the `dcs` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Schema { .. } => 2,
            Error::Capability(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 4,
        }
    }
}
