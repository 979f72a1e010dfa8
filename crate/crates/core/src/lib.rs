//! Frequency-domain Keldysh mean-field solver for an incoherently driven
//! spin-cavity system.
//!
//! The pipeline is: [`greens`] builds bare propagators on a [`grid::FrequencyGrid`],
//! [`selfenergy`] dresses them with drive-induced photon fluctuations,
//! [`saddle`] solves the two real saddle-point equations for `(mu_S, psi_f)`,
//! [`stability`] examines the normal state, and [`sweep`] scans parameters.
//! [`config`] and [`cli`] wrap everything behind a flat configuration file.

pub mod cli;
pub mod config;
pub mod convolution;
pub mod error;
pub mod greens;
pub mod grid;
pub mod nambu;
pub mod params;
pub mod saddle;
pub mod selfenergy;
pub mod stability;
pub mod sweep;
pub mod trust_region;

pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use params::{DriveSpectrum, SystemParams};
pub use saddle::{solve_saddle, Phase, SaddleProblem, SaddleSolution, SolveOptions};
pub use selfenergy::Dressing;
