use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvlError {
    /// A value-function or cost evaluation produced a non-finite number.
    #[error("non-finite value encountered at state {state:?}: {context}")]
    NonFinite { state: Vec<f64>, context: String },

    /// A kernel evaluation produced a non-finite entry.
    #[error("non-finite kernel entry for pair ({i}, {j})")]
    NonFiniteKernel { i: usize, j: usize },

    /// The requested operation is not available for this model.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A linear solve failed or did not meet its residual contract.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Invalid configuration or arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Iterative procedure did not converge within its budget.
    #[error("did not converge: {0}")]
    NoConvergence(String),

    /// A fit failed mid-run; the trace of completed iterations is attached.
    #[error("fit failed at iteration {iteration}: {source}")]
    FitFailed {
        iteration: usize,
        #[source]
        source: Box<EvlError>,
        trace: crate::engine::RunTrace,
    },
}

pub type Result<T> = std::result::Result<T, EvlError>;
