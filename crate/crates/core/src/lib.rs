pub mod bogomolny;
pub mod energetics;
pub mod error;
pub mod field;
pub mod landau;
pub mod lattice;
pub mod phase;

pub use error::{Error, Result};
