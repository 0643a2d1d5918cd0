use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit code for an error. 1 is reserved for failed checks.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CheckFailed(_) | Error::EnergyIncrease { .. } => 1,
        Error::MissingFile { .. } => 2,
        Error::ConfigSyntax { .. } | Error::TableauFile { .. } => 3,
        Error::ConfigUnknownKey { .. } => 4,
        Error::ConfigValue { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidModel(_)
        | Error::UnsupportedGrid(_)
        | Error::Structural(_)
        | Error::InvalidTableau { .. } => 5,
        Error::UnknownTableau { .. } => 6,
        Error::Step { source, .. } => match exit_code(source) {
            1 => 1,
            _ => 7,
        },
        _ => 7,
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown tableau `{name}`; available: {}", available.join(", "))]
    UnknownTableau { name: String, available: Vec<String> },

    #[error("malformed tableau: {0}")]
    Structural(String),

    #[error("tableau `{name}` failed validation (max residual {max_residual:.3e})")]
    InvalidTableau { name: String, max_residual: f64 },

    #[error("tableau file {path}: {message}")]
    TableauFile { path: String, message: String },

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("singular implicit solve: |1 - coeff*sigma| = {denominator:.3e} at mode ({kx_index}, {ky_index})")]
    SingularSolve {
        denominator: f64,
        kx_index: usize,
        ky_index: usize,
    },

    #[error("E1 + C0 = {value:.3e} is not positive{}; the SAV ratio is undefined", stage.map(|s| format!(" at stage {}", s + 1)).unwrap_or_default())]
    SavDegenerate { value: f64, stage: Option<usize> },

    #[error("E1 + C0 = {0:.3e} is negative; the auxiliary variable would be imaginary")]
    InvalidPotential(f64),

    #[error("relaxation coefficient gamma = {gamma:.6e} is not positive at tau = {tau:.3e}; reduce the step size")]
    NonPositiveRelaxation { gamma: f64, tau: f64 },

    #[error("modified energy increased from {before:.15e} to {after:.15e}")]
    EnergyIncrease { before: f64, after: f64 },

    #[error("step {step} (t = {t_hat:.6}) failed: {source}")]
    Step {
        step: usize,
        t_hat: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    ConfigSyntax { path: String, line: usize, column: usize, message: String },

    #[error("{path}: {message}")]
    ConfigUnknownKey { path: String, message: String },

    #[error("{path}: {message}")]
    ConfigValue { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
