//! Mesh-free solver for nonlinear ODEs and PDEs.
//!
//! A Gaussian policy network proposes the solution (its mean is the action),
//! a rule-based critic scores it as the negated squared equation residual
//! plus boundary/initial penalties, and a Monte Carlo policy gradient with
//! Adam pushes the reward toward zero. Time-dependent problems are solved by
//! discretized marching: each slab is trained to convergence and warm-starts
//! the next one.
//!
//! Layout:
//! * [`diff`]     - expression graphs, exact input derivatives, parameter
//!   gradients;
//! * [`policy`]   - the tanh MLP policy and its checkpoint format;
//! * [`optim`]    - Adam and stepped exponential decay schedules;
//! * [`residuals`] - per-equation critics and trial transforms;
//! * [`march`]    - sampling, per-step training, chained evaluation;
//! * [`oracles`]  - classical reference solvers used for validation.

pub mod diff;
pub mod error;
pub mod excitation;
pub mod march;
pub mod optim;
pub mod oracles;
pub mod policy;
pub mod residuals;

pub use error::{CoreError, Result};
