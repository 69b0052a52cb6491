use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("label {label} does not fit in {bits} output bits")]
    LabelRange { label: u64, bits: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{labels} distinct labels need more than {bits} output bits")]
    Capacity { labels: usize, bits: usize },

    #[error("non-finite value at step {step}")]
    Numeric { step: usize },

    #[error("degenerate range: {0}")]
    Degenerate(String),

    #[error("invalid state: {0}")]
    State(String),
}
