use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Non-finite coefficient encountered while time stepping.
    #[error("solver blow-up at t = {time} (step {step}, dt = {dt:e}, last finite energy {last_energy:e})")]
    BlowUp {
        time: f64,
        step: usize,
        dt: f64,
        last_energy: f64,
    },
    /// Blow-up of one ensemble member.
    #[error("sample {sample} (seed {seed:#018x}) failed: {source}")]
    SampleFailed {
        sample: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
