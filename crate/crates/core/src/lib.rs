pub mod cli;
pub mod compare;
pub mod error;
pub mod fem;
pub mod harness;
pub mod mesh;
pub mod model;
pub mod noise;
pub mod scheme;
pub mod solve;
pub mod spectral;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::{DofCounts, TorusMesh};
pub use sparse::SparseOperator;
