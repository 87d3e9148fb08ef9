//! Benchmark fixtures shared by the criterion targets.

use henon_core::continuation::{GalerkinConfig, GalerkinSystem};
use henon_core::{ParamFamily, ProblemParams, SymmetrySector};

pub fn laplacian_params() -> ProblemParams {
    ProblemParams::new(4, 2.0, 2.0).expect("admissible")
}

/// The p = 3 zonal system near its first degree-2 bifurcation.
pub fn zonal_system(elements: usize) -> GalerkinSystem {
    let family = ParamFamily::new(5, 3.0).expect("admissible");
    let sector = SymmetrySector::zonal(5, 2).expect("admissible");
    let cfg = GalerkinConfig { elements, ..Default::default() };
    GalerkinSystem::new(family, 0.1, sector, 2.375, cfg).expect("system")
}
