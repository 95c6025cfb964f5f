use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building, solving or auditing a device.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid device spec: `{field}` {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("generator is reducible: stationary space has dimension >= 2 (singular value ratio {ratio:e})")]
    MultipleSteadyStates { ratio: f64 },

    #[error("steady-state solver failed: {0}")]
    SolverFailure(String),

    #[error("steady state was computed for a different device spec")]
    SpecMismatch,

    #[error("vector has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },

    #[error("energy balance violated: q_l + q_r + q_s = {imbalance:e} (scale {scale:e})")]
    EnergyConservation { imbalance: f64, scale: f64 },

    #[error("entropy production diverges: bath `{bath}` is at zero temperature but exchanges heat {heat:e}")]
    DivergentEntropy { bath: &'static str, heat: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("root finder did not converge after {iterations} iterations (last x = {last_x})")]
    NoConvergence { iterations: usize, last_x: f64 },

    #[error("cooling power is not positive at T = {temperature:e}: q = {power:e}")]
    NonPositiveCooling { temperature: f64, power: f64 },

    #[error("integration failed: {0}")]
    Integration(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn spec(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field,
            reason: reason.into(),
        }
    }
}
