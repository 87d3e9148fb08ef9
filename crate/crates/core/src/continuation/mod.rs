//! Non-radial branches of the ball problem: a symmetry-reduced Galerkin
//! system and pseudo-arclength continuation from the degenerate radial state.

pub mod basis;
pub mod branch;
pub mod family;
pub mod galerkin;
pub mod validate;

pub use basis::{AngularBasis, SectorKind, SymmetrySector};
pub use branch::{
    continue_branch, continue_from, discrete_bifurcation, extended_norm, Branch, BranchEvent, BranchState,
    ContinuationConfig, DiscreteBifurcation,
};
pub use galerkin::{graded_grid, GalerkinConfig, GalerkinSystem};
