//! Ground states of the one-dimensional defocusing quintic nonlinear Schrödinger
//! equation in a piecewise-constant random potential, with the diagnostics used to
//! quantify Anderson localization: RMS width, tail fits, fragmentation and the
//! critical nonlinearity at which localization breaks down.

pub mod cli;
pub mod config;
pub mod disorder;
pub mod error;
pub mod grid;
pub mod observables;
pub mod propagator;
pub mod sweep;
pub mod tailfit;

pub use disorder::{make_potential, RandomPotential, SplitMix64};
pub use error::{Error, Result, Side};
pub use grid::{trapezoid_integrate, Grid, WaveFunction};
pub use observables::{detect_fragmentation, diagnostics, finite_difference, Diagnostics};
pub use propagator::{
    evolve_real, ground_state, step, thomas_solve, GroundStateResult, Mode, SolverParams,
};
pub use tailfit::{classify_regime, fit_tails, FitWindow, Regime, TailFit};
