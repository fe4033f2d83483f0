use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of the expression
    /// being evaluated (saturation limits, sign constraints, quota floor).
    #[error("{what} = {value} is out of domain: {bound}")]
    Domain {
        what: &'static str,
        value: f64,
        bound: String,
    },

    /// Parameter set failed validation or could not be parsed.
    #[error("invalid parameters: {0}")]
    Params(String),

    /// A requested steady state does not exist for the given control.
    #[error("steady state does not exist: {0}")]
    Existence(String),

    /// The feasible set of an optimization problem is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An input violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative routine exhausted its budget before meeting its
    /// convergence criterion. The best iterate found is attached.
    #[error(
        "no convergence after {iterations} iterations \
         (best value {best_value} at alpha = {alpha}, d = {d})"
    )]
    NoConvergence {
        iterations: usize,
        alpha: f64,
        d: f64,
        best_value: f64,
    },

    /// Adaptive integration drove the step size below its floor.
    #[error("integration step underflow at t = {t}")]
    StepUnderflow { t: f64 },

    /// A numerical kernel failed outside any iteration budget (e.g. an
    /// eigenvalue factorization stalled).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
