//! Radial bubbles, linearized spectra, bifurcation exponents and non-radial
//! branches of the critical p-Laplacian Henon equation
//! `-div(|grad u|^{p-2} grad u) = |x|^alpha u^{p*-1}`.

pub mod bifurcation;
pub mod continuation;
pub mod core_model;
pub mod error;
pub mod harmonics;
pub mod numerics;
pub mod profile;
pub mod quadrature;
pub mod radial_solver;
pub mod sturm_liouville;

pub use bifurcation::BifurcationPoint;
pub use continuation::{Branch, BranchState, SymmetrySector};
pub use core_model::{ParamFamily, PhiK, ProblemParams};
pub use error::{HenonError, Result};
pub use harmonics::HarmonicMode;
pub use profile::RadialFunction;
pub use radial_solver::{DecayFit, DecayQuantity, RadialBvp};
