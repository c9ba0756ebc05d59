use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{0} did not converge")]
    NonConvergence(&'static str),

    #[error("{quantity} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("battery capacity exhausted (it = {it:.3} Ah of {q_cap} Ah)")]
    CapacityExhausted { it: f64, q_cap: f64 },

    #[error("battery cannot deliver {p_w:.0} W at the present state")]
    BatteryOverload { p_w: f64 },

    #[error("frequency left the stable band (omega = {omega:.5} pu)")]
    Unstable { omega: f64 },

    #[error("DC link collapsed (vdc = {vdc:.1} V)")]
    DcLinkCollapse { vdc: f64 },

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    #[error("trajectory too short: need {needed:.4} s after the event, have {available:.4} s")]
    InsufficientData { needed: f64, available: f64 },

    #[error("no damping value passes every constraint")]
    NoFeasiblePoint,

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
