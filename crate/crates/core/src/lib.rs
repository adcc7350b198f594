pub mod error;
pub mod evolution;
pub mod expr;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod ode;
pub mod oscillator;
pub mod phasespace;
pub mod schemes;
pub mod special;
pub mod tomography;

pub use error::{Error, Result};
pub use grid::{GridSpec, PhaseGrid};
