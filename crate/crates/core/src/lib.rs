pub mod agents;
pub mod cli;
pub mod beliefs;
pub mod error;
pub mod inference;
pub mod normal;
pub mod protocol;
pub mod report;
pub mod simulator;
pub mod streams;

pub use error::{Error, Result};
