use thiserror::Error;

/// Errors produced by state construction, propagation, and solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Gaussian state representation violates normalizability.
    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),

    /// The minus normal mode is not oscillatory: omega^2 + 2k <= 0.
    #[error("unstable minus mode: omega^2 + 2*coupling = {omega_sq_minus} <= 0")]
    UnstableMode { omega_sq_minus: f64 },

    /// A state off the thermal curve was asked for its temperature.
    #[error(
        "state is not thermal: residuals (|Y|, |X^2-Z^2-1|) = ({residual_y:.3e}, {residual_hyp:.3e}) exceed tolerance {tol:.1e}"
    )]
    NotThermal {
        residual_y: f64,
        residual_hyp: f64,
        tol: f64,
    },

    /// The finite-difference Jacobian is too ill-conditioned to invert.
    #[error("singular jacobian: condition number {condition:.3e}")]
    SingularJacobian { condition: f64 },

    /// A finite-difference step left the stable parameter domain even
    /// after one shrink.
    #[error("finite-difference step leaves the stable parameter domain at column {column}")]
    StepOutOfDomain { column: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
