//! Numerical toolkit for controlled-linear Bolza problems
//! `min ∫_t^T Λ(s, y, u) ds + g(y(T))`, `y' = b(y)u`: growth-condition
//! verdicts, the Lipschitz reparametrization of admissible pairs, minimizing
//! sequences and a Lavrentiev-gap probe.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod exec;
pub mod expr;
pub mod growth;
pub mod intervals;
pub mod json;
pub mod lagrangian;
pub mod minimize;
pub mod quadrature;
pub mod reparam;
pub mod sampling;
pub mod trajectory;

pub use error::{BolzaError, Result};
pub use exec::ExecMode;
