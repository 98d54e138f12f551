pub mod algebra;
pub mod drift;
pub mod error;
pub mod harness;
pub mod heat_kernel;
pub mod mc;
pub mod quadrature;
pub mod scalar;
pub mod sde;
pub mod simplex;

pub use error::{LabError, Result};
