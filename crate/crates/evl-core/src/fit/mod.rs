//! Randomized function-fitting operators: box-constrained least squares on
//! random parametric basis functions, regularized RKHS regression, and an
//! ordinary polynomial baseline.

mod poly;
mod rkhs;
mod rpbf;

pub use poly::fit_polynomial;
pub use rkhs::fit_rkhs;
pub use rpbf::fit_rpbf;

/// Solver diagnostics attached to each fit and surfaced in the run trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    /// Final value of the fitting objective.
    pub objective: f64,
    /// KKT (or linear-solve) residual at termination.
    pub residual: f64,
    pub iterations: usize,
}
