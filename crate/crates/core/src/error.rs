use thiserror::Error;

use crate::kernel::KernelId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// An identity that holds analytically was violated beyond roundoff.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("kernel {kernel} is only C1; derivative of order {order} is not available")]
    UnsupportedSmoothness { kernel: KernelId, order: u32 },

    #[error("no bin holds at least {min_count} samples")]
    EmptyResult { min_count: usize },

    #[error("{kernel} at r = {r}: {source}")]
    Evaluation {
        kernel: KernelId,
        r: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
