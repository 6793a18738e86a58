//! Random-forest imputation of missing data in mixed numeric/factor tables.

mod error;

pub mod bench;
pub mod forest;
pub mod imputation;
pub mod metrics;
pub mod missingness;
pub mod seed;
pub mod table;

pub use error::{Error, Result};
