use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site out of bounds: {0}")]
    Bounds(String),
    #[error("flux {phi} is not commensurate with a periodic lattice of width {width}")]
    Commensurability { phi: f64, width: usize },
    #[error("duplicate link between sites {0} and {1}")]
    DuplicateLink(usize, usize),
    #[error("plaquette at ({0}, {1}) has a missing link")]
    IncompletePlaquette(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("need at least {needed} modes, have {have}")]
    Size { needed: usize, have: usize },
    #[error("{0}")]
    Domain(String),
    #[error("concentration factor undefined: zero photon number in neighbourhood")]
    UndefinedR,
    #[error("hardware range: {0}")]
    HardwareRange(String),
    #[error("linear algebra failure: {0}")]
    Numerical(String),
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Short stable identifier, used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Bounds(_) => "bounds",
            Error::Commensurability { .. } => "commensurability",
            Error::DuplicateLink(..) => "duplicate_link",
            Error::IncompletePlaquette(..) => "incomplete_plaquette",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotHermitian(_) => "not_hermitian",
            Error::Size { .. } => "size",
            Error::Domain(_) => "domain",
            Error::UndefinedR => "undefined_r",
            Error::HardwareRange(_) => "hardware_range",
            Error::Numerical(_) => "numerical",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Invalid(_) => "invalid",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
