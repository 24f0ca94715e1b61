//! Command-line front end and HTTP annotation service for `ohc-topics`.

pub mod commands;
pub mod server;
