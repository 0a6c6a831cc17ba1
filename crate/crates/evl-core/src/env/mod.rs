//! Benchmark environments: the optimal replacement problem (with its grid
//! oracle), cart-pole balancing, and the acrobot swing-up task.
//!
//! All environments are cost-minimizing: rewards from the original problem
//! statements are negated so the core engine stays a pure minimizer.

mod acrobot;
mod cartpole;
mod replacement;

pub use acrobot::{acrobot_model, AcrobotParams};
pub use cartpole::{cartpole_model, CartPoleParams};
pub use replacement::{
    replacement_model, replacement_oracle, ReplacementParams, ACTION_KEEP, ACTION_REPLACE,
};
