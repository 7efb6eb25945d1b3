//! Pulse-based variational quantum optimization (PBVQO) on a flux-driven
//! superconducting spin ring.
//!
//! The crate simulates a ring of qubits whose always-on `YY` coupling is
//! modulated by a filtered trigonometric pulse, optimizes the pulse to prepare
//! MAX-CUT ground states, and benchmarks the result against gate-based QAOA.

// Negated comparisons are the NaN-rejecting guards throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hamiltonians;
pub mod optimizers;
pub mod parallel;
pub mod pulses;
pub mod simulator;
pub mod study;
pub mod workflows;

pub use error::{Error, Result};
