//! File formats and the parallel pattern runner behind the `bireg` command
//! line, on top of [`bireg_core`].

pub mod config;
pub mod csv;
pub mod graph_io;
pub mod pgm;
pub mod turing;

pub use bireg_core as core;
