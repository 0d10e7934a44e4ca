//! Harness around the `gundy-stein` library: the instance text format and
//! the seeded batch verification suite. The `gundy-stein` binary is a thin
//! subcommand layer over these two modules.

pub mod io;
pub mod suite;
