use thiserror::Error;

/// Errors produced anywhere in the trim pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrimError {
    #[error("configuration error: missing key `{0}`")]
    MissingKey(String),

    #[error("configuration error: key `{key}`: {message}")]
    BadValue { key: String, message: String },

    #[error("validation error: `{field}` = {value} violates {bound}")]
    Validation {
        field: String,
        value: f64,
        bound: String,
    },

    #[error("model error: {0}")]
    Model(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rotor solution did not converge after {iterations} iterations (residual {residual:.3e})")]
    Rotor { iterations: usize, residual: f64 },

    #[error("coaxial inflow did not converge after {iterations} iterations (thrust residuals {upper:.3e} N, {lower:.3e} N)")]
    Inflow {
        iterations: usize,
        upper: f64,
        lower: f64,
    },

    #[error("propeller solution failed: {0}")]
    Propeller(String),

    #[error("trim did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("sweep failed at {speed} m/s: {source}")]
    Sweep {
        speed: f64,
        #[source]
        source: Box<TrimError>,
    },

    #[error("elevator search failed at {speed} m/s, delta_e = {delta_e}: {source}")]
    Search {
        speed: f64,
        delta_e: f64,
        #[source]
        source: Box<TrimError>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TrimError {
    fn from(e: std::io::Error) -> Self {
        TrimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TrimError>;
