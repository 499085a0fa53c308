pub mod accum;
pub mod closedforms;
pub mod epstein;
pub mod error;
pub mod exec;
pub mod forms;
pub mod harness;
pub mod lattice;
pub mod specfun;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64;
