pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod liouvillian;
pub mod models;
pub mod perturbation;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
