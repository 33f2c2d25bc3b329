//! Reducibility of linear Hamiltonian systems with quasi-periodic
//! coefficients.
//!
//! The crate transforms `h = Σ v_j (x_j² + ξ_j²)/2 + ε W(ωt; x, ξ)`, with
//! `W` quadratic in `(x, ξ)`, into a θ-independent normal form through a
//! sequence of θ-dependent affine symplectic changes of variables.
//! Every numerical type is generic over [`Real`]; the `*64` aliases fix
//! the usual double-precision instantiation.

pub mod diophantine;
pub mod driver;
pub mod error;
pub mod flow;
pub mod grid;
pub mod homology;
pub mod linalg;
pub mod random;
pub mod scalar;
pub mod schedule;
pub mod series;
pub mod smoothing;
pub mod symbol;
pub mod verifier;

#[cfg(test)]
mod testutil;

pub use driver::{run, Problem, ProblemConfig, RunReport};
pub use error::{KamError, Result};
pub use flow::ThetaAffineMap;
pub use scalar::Real;
pub use schedule::{make_schedule, Schedule, ScheduleParams};
pub use series::{FourierSeries, MultiIndex};
pub use symbol::{NormalForm, QuadraticSymbol, RealBlocks, SymbolClass};

pub type FourierSeries64 = FourierSeries<f64>;
pub type QuadraticSymbol64 = QuadraticSymbol<f64>;
pub type NormalForm64 = NormalForm<f64>;
pub type ThetaAffineMap64 = ThetaAffineMap<f64>;
pub type Problem64 = Problem<f64>;
pub type ProblemConfig64 = ProblemConfig<f64>;
pub type RunReport64 = RunReport<f64>;
