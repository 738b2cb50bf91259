use alloc::string::String;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("infeasible eavesdropper region: center distance {d} must exceed half-length {r} (both > 0)")]
    InfeasibleRegion { d: f64, r: f64 },
    #[error("{name} = {value} lies outside [{lo}, {hi}]")]
    AngleOutOfBounds {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),
    #[error("non-finite function value while differencing coordinate {0}")]
    NonFinite(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
