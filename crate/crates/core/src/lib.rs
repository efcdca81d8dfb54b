pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod heads;
pub mod lattice;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod toy;
pub mod train;

pub use error::{Error, Result};
