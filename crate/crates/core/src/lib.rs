//! Automated engineering of quantum-walk output states as a black-box
//! optimization problem.
//!
//! * [`walk`] simulates the coin/shift walk and computes fidelities.
//! * [`oracle`] turns a parameter vector into a noisy photon-counting cost,
//!   with hidden device drift.
//! * [`surrogate`] is the RBF surrogate global optimizer.
//! * [`baselines`] holds random search and Powell's direction-set method.
//! * [`harness`] wires oracles to optimizers for the experiment families and
//!   persists seeded, reproducible outputs.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod surrogate;
pub mod trace;
pub mod walk;

pub use error::{Error, Result};
