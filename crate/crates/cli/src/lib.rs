//! Command-line front end: configuration, materials registry, file
//! emitters and the `mlfilter` subcommands.

pub mod commands;
pub mod config;
pub mod csv;
pub mod design;
pub mod error;
pub mod registry;
pub mod report;
pub mod touchstone;

pub use commands::run;
