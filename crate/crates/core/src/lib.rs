//! Two-dimensional time-dependent Ginzburg-Landau solver.

pub mod array;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod fields;
pub mod grid;
pub mod integrators;
pub mod io;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod render;
pub mod verify;
