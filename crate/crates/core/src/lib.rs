//! Conditional-probability brackets over finite and continuous sample spaces,
//! discrete- and continuous-time Markov chain evolution, and the laws of the
//! Poisson, Wiener and drifting Brownian processes.
//!
//! The central object is the bracket `P(A|B) = P(A ∩ B) / P(B)`: the left
//! side is the event being asked about, the right side the evidence. A
//! distribution is the right-hand state `|Ω⟩`; the all-ones functional `P(Ω|`
//! sums its components. The same pairing drives Markov chain evolution, where
//! row vectors evolve as `u P^n` and column vectors as `(Pᵀ)^n v`, and the
//! continuous-time master equation `∂ₜ p = Qᵀ p`.
//!
//! ```
//! use bracket_core::{DiscreteSpace, EventSet};
//!
//! let die = DiscreteSpace::uniform(["1", "2", "3", "4", "5", "6"]).unwrap();
//! let even = EventSet::from_labels(["2", "4", "6"]);
//! let two = EventSet::from_labels(["2"]);
//! assert!((die.bracket(&two, &even).unwrap() - 1.0 / 3.0).abs() < 1e-12);
//! ```
//!
//! Textual queries such as `P(even|Omega)` or `E[X*Y]` are parsed and
//! evaluated against JSON model files by the [`dsl`] module.

// Checks are written as `!(x >= 0.0)` so that NaN is rejected with them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod ctmc;
pub mod dsl;
pub mod dtmc;
mod error;
pub mod format;
pub mod linalg;
pub mod observables;
pub mod processes;
pub mod quadrature;
pub mod sample;
mod tolerance;
pub mod verify;

pub use continuous::{Density, Density1D, Density2D, Interval, PlanarRegion};
pub use ctmc::{GainLossRates, Generator, GridKernel};
pub use dtmc::{Orientation, ProbVector, StochasticMatrix};
pub use error::{Error, Result};
pub use observables::{Observable, ProductSpace};
pub use processes::{BrownianMotion, PoissonProcess, Process, SamplePath, WienerProcess};
pub use sample::{DiscreteSpace, EventSet, Partition};
pub use tolerance::Tolerances;
