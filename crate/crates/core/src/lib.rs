//! Two-component condensate dynamics in a ring trap: a split-step Fourier
//! propagator, revival and separability observables, and parameter sweeps.

pub mod analysis;
pub mod check;
pub mod cli;
pub mod config;
pub mod contour;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod observables;
pub mod simulation;
pub mod solver;

pub use error::{Error, Result};
