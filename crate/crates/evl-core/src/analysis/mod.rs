//! Executable calculators and simulators for the theory side: error
//! propagation bounds, sample-complexity formulas, the dominating Markov
//! chain, and Monte Carlo policy evaluation.

mod bounds;
mod chain;
mod dominance;
mod policy_eval;

pub use bounds::{
    complexity_rkhs, complexity_rpbf, error_bound_lp, error_bound_sup, ComplexityInputs,
    NormChoice, RkhsComplexity, RpbfComplexity,
};
pub use chain::{
    chain_marginal, chain_mixing_bound, chain_simulate, chain_steady_state, chain_transition_matrix,
    ChainOccupancy, DominatingChain,
};
pub use dominance::{
    build_error_levels, dominance_check, estimate_q, DominanceReport, DominanceRow,
};
pub use policy_eval::{policy_relative_error, PolicyErrorReport};
