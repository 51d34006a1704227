pub mod audit;
pub mod bravo;
pub mod cli;
pub mod error;
pub mod sampling;
pub mod service;
pub mod session;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
