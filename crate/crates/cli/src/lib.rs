//! Model persistence, command-line interface and HTTP API.

pub mod api;
pub mod cli;
pub mod model_file;
pub mod server;
