//! Command-line driver: `sample`, `correlate`, `oracle` and `report`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
