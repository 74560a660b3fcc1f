//! Iterated remainder operators for sequences and functions, with certified
//! truncation bounds, and fixed-point construction of solutions with
//! prescribed asymptotic behavior for
//!
//! * the difference equation `Delta^m x_n = a_n f(n, x_n) + b_n`, and
//! * the differential equation `x^(m)(t) = a(t) f(t, x(t)) + b(t)`.
//!
//! Given an approximate solution `y` (`Delta^m y = b`, resp. `y^(m) = b`) the
//! solvers iterate `A x = y + (-1)^m r^m (a f(., x))` and report residuals and
//! the decay of `|x - y| * n^(-alpha)`.

pub mod cli;
pub mod envelope;
pub mod error;
pub mod exec;
pub mod interp;
pub mod quadrature;
pub mod remainder;
pub mod sequences;
pub mod solver;

pub use envelope::{DecayEnvelope, EnvelopeKind};
pub use error::{Error, Result};
pub use exec::Execution;
pub use quadrature::QuadratureConfig;
pub use remainder::{Bracket, SummabilityReport, Verdict};
pub use sequences::{ExtendedNorm, Interval, SequenceWindow};
