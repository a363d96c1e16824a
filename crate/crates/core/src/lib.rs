//! One-dimensional Brenner-Navier-Stokes-Fourier flow in Lagrangian mass
//! coordinates: a backward-Euler Picard solver plus diagnostics for the
//! relative-entropy balance, level-set energies and temperature bounds.

pub mod cli;
pub mod diagnostics;
pub mod grid_ops;
pub mod model;
pub mod oracle;
pub mod stepper;

pub use grid_ops::{BoundaryMode, FaceMean, Field, Grid};
pub use model::Params;
pub use stepper::{State, StepConfig, Trajectory};
