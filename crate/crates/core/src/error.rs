use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Error categories surfaced by the simulation and analysis pipeline.
///
/// The CLI maps these onto exit-status categories, so keep the variants
/// coarse: configuration, I/O, numerical, generation.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to converge or produced non-finite values.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Invalid configuration (bad key, bad value, inconsistent preset).
    #[error("config error: {0}")]
    Config(String),

    /// Ensemble generation failed (e.g. rejection sampling exhausted).
    #[error("generation error: {0}")]
    Generation(String),

    /// Mismatched array shapes or time grids.
    #[error("shape error: {0}")]
    Shape(String),

    /// Series too short for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Nonlinear fit failed.
    #[error("fit error: {0}")]
    Fit(String),

    /// Field evaluation on a conductor or at a singular edge point.
    #[error("singular point: {0}")]
    SingularPoint(String),

    /// File format or schema-version mismatch.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse category name used for exit-status mapping and logs.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::Numerical(_) | Error::Fit(_) | Error::SingularPoint(_) => {
                "numerical"
            }
            Error::Config(_) | Error::Shape(_) | Error::InsufficientData(_) => "config",
            Error::Generation(_) => "generation",
            Error::Schema(_) | Error::Io(_) => "io",
        }
    }
}
