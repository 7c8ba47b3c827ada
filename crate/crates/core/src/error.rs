use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("could not drop at least {needed} vehicles after {retries} retries (last drop had {got})")]
    TooFewVehicles { needed: usize, got: usize, retries: usize },

    #[error("cannot form {wanted} distinct V2V pairs (only {formed} possible)")]
    NotEnoughV2vPairs { wanted: usize, formed: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("cannot split {links} links into {clusters} clusters")]
    BadClusterCount { links: usize, clusters: usize },

    #[error("effective threshold requires gamma0 > 0 and 0 < p0 < 1 (gamma0={gamma0}, p0={p0})")]
    BadThreshold { gamma0: f64, p0: f64 },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("LP optimality certificate failed: {0}")]
    LpCertificate(String),

    #[error("non-basic input: no edge of the remaining {remaining} satisfies the peeling bound")]
    NonBasicInput { remaining: usize },

    #[error("instance too large for exhaustive search: {0}")]
    OracleTooLarge(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
