pub mod bundle;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod model;
pub mod error;
pub mod eval;
pub mod numeric;
pub mod retrieval;
pub mod slt;
pub mod synth;

pub use error::{Error, Result};
