pub mod args;
pub mod commands;
pub mod config;
pub mod fsio;
pub mod report;

pub use commands::{run, EXIT_DATA, EXIT_NETWORK, EXIT_OK, EXIT_USAGE};
