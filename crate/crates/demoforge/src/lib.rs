//! Recording formats, the session service and the command-line tool around
//! [`demoforge_core`].

pub mod cli;
pub mod config;
pub mod csv_export;
pub mod demos;
pub mod files;
pub mod plot;
pub mod protocol;
pub mod recording;
pub mod server;
pub mod session;
