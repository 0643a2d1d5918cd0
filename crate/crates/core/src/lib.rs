//! Energy-stable implicit-explicit relaxation Runge-Kutta (IMEX RRK) time
//! integration of phase-field gradient flows in scalar auxiliary variable
//! (SAV) form.
//!
//! The crate is organised bottom-up:
//!
//! * [`tableau`]: double Butcher tableaux, validation and dissipation matrices.
//! * [`spectral`]: periodic grids, fields and Fourier pseudo-spectral operators.
//! * [`model`]: Allen-Cahn / Cahn-Hilliard / vector Allen-Cahn models in SAV form.
//! * [`integrator`]: the relaxed IMEX RK stepper (standard, IDT and RT modes).
//! * [`harness`]: experiment presets, convergence and slope studies, energy traces.
//! * [`config`] and [`io`]: run configuration files and output writers used by the CLI.

pub mod config;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod io;
pub mod model;
pub mod spectral;
pub mod tableau;

pub use error::{Error, Result};
pub use integrator::{GammaEstimate, StageData, StepRecord, Stepper, SteppingMode};
pub use model::{Model, ModelSpec, Operator, Potential, SavState};
pub use spectral::{Field, PeriodicGrid, SpectralContext, Spectrum, Symbol};
pub use tableau::{DissipationMatrices, DoubleButcherTableau, ValidationReport};

/// Library version string recorded in every output directory.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
