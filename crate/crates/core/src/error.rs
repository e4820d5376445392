use thiserror::Error;

/// Errors raised by the filter pipeline and the simulation loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("barrier gradient undefined: position within {tol:e} of the obstacle center")]
    DegenerateGradient { tol: f64 },

    #[error("relative-degree assumption violated: |L_g h| = {norm:e} below tolerance")]
    RelativeDegreeViolation { norm: f64 },

    #[error("filter kind {kind} is not differentiable; use a smooth penalty kind")]
    NotDifferentiable { kind: String },

    #[error("thrust direction undefined: desired acceleration cancels gravity")]
    DegenerateThrust,

    #[error("linear solve failed: system matrix is not positive definite")]
    SolveFailure,

    #[error("non-finite state entry")]
    NonFiniteState,

    #[error("invalid {name}: {constraint}")]
    InvalidParams {
        name: &'static str,
        constraint: &'static str,
    },

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<FilterError>,
    },
}

impl FilterError {
    /// Stamp an error with the simulation time at which it occurred.
    pub fn at_time(self, t: f64) -> FilterError {
        match self {
            FilterError::AtTime { .. } => self,
            other => FilterError::AtTime {
                t,
                source: Box::new(other),
            },
        }
    }
}
