//! Taylor-Hood P2/P1 finite elements on the torus.

pub mod assemble;
pub mod element;
pub mod lbb;
pub mod quadrature;
pub mod space;

pub use assemble::{
    assemble_divergence, assemble_mass, assemble_stiffness, load_scalar, load_vector, Space,
};
pub use lbb::discrete_lbb_constant;
pub use quadrature::QuadratureRule;
pub use space::{saddle_blocks, MixedField, PressureRole, TaylorHood};
