//! Library side of the `mxcert` command-line tool: candidate-number parsing
//! and the subcommand implementations.

pub mod commands;
pub mod expr;
