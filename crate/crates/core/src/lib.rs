pub mod aim;
pub mod error;
pub mod series;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub mod eigensolver;
pub mod oracle;
pub mod reference;
pub mod cli;
