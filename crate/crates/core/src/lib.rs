//! Simulation and verification toolkit for non-isothermal multicomponent
//! ideal-gas mixtures with Maxwell-Stefan mass diffusion and Fourier heat
//! conduction.
//!
//! - [`thermo`]: ideal-gas free energy and derived quantities, entropy variables.
//! - [`stefan`]: generalized forces, friction matrix, the constrained
//!   (Bott-Duffin) velocity solve, dissipation and the Onsager matrix.
//! - [`parabolic`]: zero-mean-flow solver, implicit Euler in entropy variables.
//! - [`hyperbolic`]: periodic solver for the full system with barycentric
//!   velocity, and epsilon-relaxation sweeps.
//! - [`diagnostics`]: budgets, relative entropies, convergence orders.
//! - [`config`]: the run configuration format used by the `mixgas` binary.

// NaN-rejecting `!(x > 0.0)` guards and index loops over coupled arrays are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hyperbolic;
pub mod output;
pub mod parabolic;
pub mod params;
pub mod stefan;
pub mod thermo;

pub use error::{Error, Result};
pub use grid::Grid1D;
pub use params::{Conductivity, Friction, MixtureParams};
pub use thermo::{EntropyVars, ThermoEval, ThermoState};
