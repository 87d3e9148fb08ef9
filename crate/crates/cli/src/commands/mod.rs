pub mod bifurcate;
pub mod branch;
pub mod eval;
pub mod spectrum;
pub mod verify;
