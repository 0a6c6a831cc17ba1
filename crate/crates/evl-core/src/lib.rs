//! Solver library for continuous-state, finite-action discounted MDPs using
//! empirical value learning (EVL) with randomized function approximation.
//!
//! The crate is organized around five pieces:
//!
//! * [`mdp`] — the MDP abstraction plus exact and empirical Bellman backups;
//! * [`fit`] — the randomized fitting operators (random parametric basis
//!   functions, regularized RKHS regression, and a polynomial baseline);
//! * [`engine`] — the outer iteration `v_{k+1} = fit(backup(v_k))` with
//!   residual tracking and checkpointing;
//! * [`env`] — the benchmark environments (optimal replacement, cart-pole,
//!   acrobot) and the grid-based oracle for the replacement problem;
//! * [`analysis`] — error-bound and sample-complexity calculators, the
//!   dominating Markov chain tooling, and Monte Carlo policy evaluation.

pub mod analysis;
pub mod engine;
pub mod env;
pub mod error;
pub mod fit;
pub mod mdp;
pub mod rng;
pub mod value;

pub use engine::{EvlConfig, FitterSpec, IterationRecord, MuSampler, RunTrace};
pub use error::EvlError;
pub use mdp::{MdpModel, SampledBackup, State};
pub use rng::{substream, Rng};
pub use value::{Basis, Kernel, RpbfFamily, RpbfTheta, ValueFn};
