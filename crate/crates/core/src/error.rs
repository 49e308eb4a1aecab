use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular profile: {0}")]
    Singular(String),
    #[error("step rejected after {halvings} halvings at t = {t}")]
    Stiffness { t: f64, halvings: u32 },
    #[error("tip not resolved on the {side} side: {detail}")]
    TipNotResolved { side: &'static str, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("wrong shooting branch: {0}")]
    Branch(String),
    #[error("cannot fit: {0}")]
    Unfit(String),
    #[error("not applicable: {0}")]
    Inapplicable(String),
    #[error("barrier construction failed: {0}")]
    Construction(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("incompatible reports: {0}")]
    Incompatible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
