use thiserror::Error;

/// One `(T, p)` evaluation made during a run-time search.
pub type Probe = (f64, f64);

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("capacity exceeded: {what} = {value} (limit {limit})")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("instance generation failed after {restarts} restarts (n = {n})")]
    GenerationFailure { n: usize, restarts: usize },

    #[error(
        "integration accuracy: norm drift {drift:.3e} exceeds tolerance {tolerance:.3e} \
         ({steps} steps, dt = {dt:.3e}, T = {run_time})"
    )]
    IntegrationAccuracy {
        drift: f64,
        tolerance: f64,
        steps: usize,
        dt: f64,
        run_time: f64,
    },

    #[error(
        "step self-check failed: deviation {deviation:.3e} between halvings {halvings} and {} \
         exceeds {tolerance:.3e}", halvings + 1
    )]
    SelfCheck {
        halvings: u32,
        deviation: f64,
        tolerance: f64,
    },

    #[error("time search exceeded T_max = {t_max} without reaching the band ({} probes)", probes.len())]
    SearchFailure { t_max: f64, probes: Vec<Probe> },

    #[error("underdetermined fit: {distinct} distinct abscissae, need at least 3")]
    Underdetermined { distinct: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Numerical failures as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationAccuracy { .. }
                | Error::SelfCheck { .. }
                | Error::SearchFailure { .. }
        )
    }
}
