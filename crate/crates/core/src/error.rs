use thiserror::Error;

/// Errors raised by the solvers, coefficient evaluation and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient `{field}` evaluated to a non-finite value at x = {x}, xi = {xi}")]
    CoefficientEval { field: String, x: f64, xi: f64 },

    #[error("value {value} outside the admissible range [{lo}, {hi}] for {what}")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("index or time out of range: {0}")]
    Range(String),

    #[error("velocity grid does not cover the required interval [{need_lo}, {need_hi}] (grid spans [{lo}, {hi}])")]
    Coverage {
        need_lo: f64,
        need_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("velocity domain too small: {exits} of {nodes} characteristic feet left [xi_min, xi_max] into unsaturated boundary data at t = {t}; enlarge the velocity interval")]
    DomainTooSmall { exits: usize, nodes: usize, t: f64 },

    #[error("CFL condition violated: {0}")]
    Cfl(String),

    #[error("non-finite value detected at step {step}")]
    NonFinite { step: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
