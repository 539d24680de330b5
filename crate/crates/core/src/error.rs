use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A non-finite value reached the encoder; this always signals a numerical
    /// failure upstream.
    #[error("cannot encode non-finite value {0}")]
    Encoding(f64),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("schedule overflow: alpha={alpha} at round {round}")]
    ScheduleOverflow { alpha: u64, round: u32 },

    #[error("arm {arm} out of range for instance with {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("trial failed (x={x}, algorithm={algorithm}, trial={trial}, seed={seed}): {source}")]
    Trial {
        x: f64,
        algorithm: String,
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
