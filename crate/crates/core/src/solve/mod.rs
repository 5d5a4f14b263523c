//! Direct solvers for the symmetric systems produced by the schemes.

pub mod ldlt;
pub mod ordering;
pub mod saddle;

pub use ldlt::{factorize, FactorKind, Factorization, SolveWorkspace};
pub use saddle::{SaddleSolution, SaddleSolver, SaddleWorkspace};
