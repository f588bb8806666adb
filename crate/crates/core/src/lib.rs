pub mod catalog;
pub mod einstein_weyl;
pub mod error;
pub mod field;
pub mod geometry;
pub mod jet;
pub mod kaluza_klein;
pub mod report;
pub mod residual;
pub mod sampling;
pub mod suite;
pub mod tensor;

pub use error::{Error, Result};
