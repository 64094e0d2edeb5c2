//! Configuration, output formats and command orchestration for the
//! `pespec` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod svg;
