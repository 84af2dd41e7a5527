pub mod cli;
pub mod control;
pub mod error;
pub mod solvers;
pub mod specquad;
pub mod symexpr;
pub mod trajectory;
pub mod variational;

pub use error::{Error, Result};
