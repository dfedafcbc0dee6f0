//! Uniform lattices over `(x, y, t)`, sampled fields, Lebesgue and mixed
//! norms, lattice transforms and field import/export.

mod field;
mod grid;
pub mod io;
mod norms;
pub mod transform;

pub use field::Field;
pub use grid::{Axis, Grid};
pub use norms::{lp_norm, mixed_norm, weak_l1, Layout, NormSpec};
