pub mod baseline;
pub mod data;
pub mod error;
pub mod explain;
pub mod nn;
pub mod train;

pub use error::{Error, Result};
