//! Library side of the `emhd` binary: configuration, commands and the verify suite.

pub mod app;
pub mod config;
pub mod verify;
