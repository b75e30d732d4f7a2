//! Geometric measures of entanglement for multipartite pure states.
//!
//! The geometric measure `E(ψ, S) = 1 − max_{φ∈S} |⟨ψ|φ⟩|²` is computed for
//! sets `S` that are closed under stochastic local operations (SLOCC): product
//! states, bounded Schmidt rank across a cut, the closure of the three-qubit
//! W class, the (dense) GHZ closure, and unions of these. The associated
//! distance is `d = √(2(1 − √(1 − E)))`.
//!
//! Module map:
//!
//! * [`linalg`]: small dense complex kernels (SVD, Hermitian eigensolver,
//!   polar decomposition, Haar unitaries, random instruments).
//! * [`state`]: dense pure-state tensors.
//! * [`bipartite`]: Schmidt decomposition and closed-form rank-k measures.
//! * [`product_opt`]: multi-start alternating optimization over product states.
//! * [`wclass`]: the W-closure measure and the GHZ-density ε-sequence.
//! * [`tangle`]: the three-tangle (hyperdeterminant and concurrence routes).
//! * [`locc`]: local instruments, SLOCC action and monotonicity fuzzing.
//! * [`classify`]: three-qubit SLOCC classes and the measure dispatcher.
//! * [`cli`]: state files and the command-line front end.

pub mod bipartite;
pub mod classify;
pub mod cli;
mod error;
pub mod linalg;
pub mod locc;
pub mod par;
pub mod product_opt;
pub mod state;
pub mod tangle;
pub mod wclass;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use bipartite::{Cut, SchmidtDecomposition};
pub use classify::{SISetId, SloccClass};
pub use linalg::{ComplexMatrix, RandomSource, SvdResult};
pub use product_opt::{MeasureResult, OptConfig};
pub use state::{MeasurementOutcome, PureState};
